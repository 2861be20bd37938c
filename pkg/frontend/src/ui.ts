/** DOM wiring: slider panel, canvas, presets, FPS readout, error banner. */

import { FpsMeter } from "./fps.js";
import { DecodedFrame, ServiceInfo } from "./protocol.js";
import { SendScheduler } from "./rateLimiter.js";
import { AvatarSession } from "./session.js";
import { BODY_DIMS, FACE_DIMS, PresetName, UiPoseState } from "./state.js";

export class PoseStudio {
  readonly state = new UiPoseState();
  private readonly fps = new FpsMeter();
  private nextId = 1;
  private scheduler: SendScheduler;
  private session: AvatarSession | null = null;
  private sliders: HTMLInputElement[] = [];
  private canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private banner: HTMLElement;
  private fpsLabel: HTMLElement;
  private frameLabel: HTMLElement;

  constructor(private readonly root: HTMLElement) {
    this.banner = this.el("div", "banner");
    this.banner.hidden = true;
    const stage = this.el("div", "stage");
    this.canvas = document.createElement("canvas");
    this.canvas.width = 512;
    this.canvas.height = 512;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas unavailable");
    }
    this.ctx = ctx;
    stage.appendChild(this.canvas);

    const status = this.el("div", "status");
    this.fpsLabel = this.el("span", "fps");
    this.frameLabel = this.el("span", "frame-id");
    status.append(this.fpsLabel, this.frameLabel);
    stage.appendChild(status);

    const presets = this.el("div", "presets");
    for (const name of ["rest", "max-left-turn", "random"] as PresetName[]) {
      const button = document.createElement("button");
      button.textContent = name;
      button.addEventListener("click", () => this.applyPreset(name));
      presets.appendChild(button);
    }

    const panel = this.el("div", "sliders");
    panel.append(
      this.sliderGroup("facial expression", 0, FACE_DIMS),
      this.sliderGroup("head and torso rotation", FACE_DIMS, BODY_DIMS),
    );

    this.root.append(this.banner, stage, presets, panel);
    this.scheduler = new SendScheduler(
      () => this.flushPose(),
      (cb) => requestAnimationFrame(() => cb()),
    );
  }

  private el(tag: string, cls: string): HTMLElement {
    const node = document.createElement(tag);
    node.className = cls;
    return node;
  }

  private sliderGroup(title: string, start: number, count: number): HTMLElement {
    const group = this.el("fieldset", "group");
    const legend = document.createElement("legend");
    legend.textContent = title;
    group.appendChild(legend);
    for (let i = start; i < start + count; i++) {
      const row = this.el("label", "slider-row");
      const caption = document.createElement("span");
      caption.textContent = `pose[${i}]`;
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "-1";
      slider.max = "1";
      slider.step = "0.01";
      slider.value = "0";
      slider.addEventListener("input", () => {
        this.onSliderChange(i, parseFloat(slider.value));
      });
      row.append(caption, slider);
      group.appendChild(row);
      this.sliders.push(slider);
    }
    return group;
  }

  async connect(baseUrl: string): Promise<void> {
    this.session = new AvatarSession(
      baseUrl,
      {
        onInfo: (info) => this.fitCanvas(info),
        onFrame: (frame) => this.onFrame(frame),
        onMalformedFrame: () => this.state.countDropped(),
        onServerError: (message) => this.showBanner(`server: ${message}`),
        onStatus: (status) => {
          if (status === "retrying") {
            this.showBanner("connection lost, retrying...");
          } else if (status === "open") {
            this.hideBanner();
          }
        },
        onOpen: () => this.flushPose(),
      },
      (url) => new WebSocket(url) as unknown as import("./session.js").WebSocketLike,
      (url) => fetch(url),
    );
    try {
      await this.session.connect();
    } catch (err) {
      this.showBanner(`cannot reach the avatar service: ${String(err)}`);
      setTimeout(() => this.connect(baseUrl), 2000);
    }
  }

  private fitCanvas(info: ServiceInfo): void {
    this.canvas.width = info.width;
    this.canvas.height = info.height;
  }

  onSliderChange(index: number, value: number): void {
    this.state.setSlider(index, value);
    this.scheduler.schedule();
  }

  applyPreset(name: PresetName): void {
    this.state.applyPreset(name);
    this.state.values.forEach((v, i) => {
      if (this.sliders[i]) {
        this.sliders[i].value = v.toFixed(2);
      }
    });
    this.scheduler.schedule();
  }

  private flushPose(): void {
    if (!this.session?.connected || !this.state.dirty) {
      return;
    }
    this.session.sendPose(this.nextId++, this.state.values);
    this.state.dirty = false;
  }

  private onFrame(frame: DecodedFrame): void {
    if (!this.state.acknowledge(frame.frameId)) {
      return;
    }
    const pixels = new Uint8ClampedArray(frame.pixels);  // detach from the ws buffer
    const image = new ImageData(pixels, frame.width, frame.height);
    this.ctx.putImageData(image, 0, 0);
    this.fps.tick(performance.now());
    this.fpsLabel.textContent = `${this.fps.fps.toFixed(1)} fps`;
    this.frameLabel.textContent = `frame ${frame.frameId}`;
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  private hideBanner(): void {
    this.banner.hidden = true;
  }
}

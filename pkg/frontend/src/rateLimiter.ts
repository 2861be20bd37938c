/** Coalesces bursts of UI changes into at most one send per display frame.
 *
 * Sends are fire-and-forget; the server's latest-wins mailbox handles
 * anything faster than the renderer. The frame scheduler is injectable so
 * tests can drive it with fake timers.
 */

export type FrameScheduler = (callback: () => void) => void;

export class SendScheduler {
  private pending = false;

  constructor(
    private readonly flush: () => void,
    private readonly requestFrame: FrameScheduler,
  ) {}

  /** Request a flush; bursts within one frame collapse into one call. */
  schedule(): void {
    if (this.pending) {
      return;
    }
    this.pending = true;
    this.requestFrame(() => {
      this.pending = false;
      this.flush();
    });
  }
}

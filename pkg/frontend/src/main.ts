import { PoseStudio } from "./ui.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}
const studio = new PoseStudio(root);
void studio.connect(window.location.origin);

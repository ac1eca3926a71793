import { startClient } from "./client.js";

const canvas = document.getElementById("tracker") as HTMLCanvasElement | null;
if (!canvas) {
  throw new Error("missing #tracker canvas");
}
const params = new URLSearchParams(window.location.search);
const host = params.get("server") ?? "127.0.0.1:8765";
startClient(`ws://${host}/session`, canvas);

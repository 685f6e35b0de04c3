import init, { CylinderSim, rotate_circle, diffusion_limit } from "./pkg/vortexflow_web.js";

const $ = (id) => document.getElementById(id);

function draw(canvas, rgba, n) {
  canvas.width = n;
  canvas.height = n;
  const img = new ImageData(new Uint8ClampedArray(rgba), n, n);
  canvas.getContext("2d").putImageData(img, 0, 0);
}

let sim = null;
let running = true;
let history = [];

function reset() {
  const n = Number($("grid").value);
  sim = new CylinderSim(n, Number($("density").value));
  history = [];
}

function plot() {
  const c = $("vy-plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.beginPath();
  const y0 = 10;
  g.moveTo(0, y0);
  g.lineTo(c.width, y0);
  // Reference terminal velocity.
  const scale = (c.height - 20) / 0.6;
  g.setLineDash([4, 4]);
  g.moveTo(0, y0 + 0.47 * scale);
  g.lineTo(c.width, y0 + 0.47 * scale);
  g.stroke();
  g.setLineDash([]);
  g.strokeStyle = "#c33";
  g.beginPath();
  history.forEach(([t, v], i) => {
    const x = (t / 2.5) * c.width;
    const y = y0 - v * scale;
    if (i === 0) g.moveTo(x, y); else g.lineTo(x, y);
  });
  g.stroke();
}

function frame() {
  if (running && sim && sim.time() < 2.5 - 1e-9) {
    sim.step(2);
    history.push([sim.time(), sim.velocity_y()]);
  }
  if (sim) {
    draw($("omega"), sim.vorticity_rgba(), sim.size());
    $("t").value = sim.time().toFixed(2);
    $("vy").value = sim.velocity_y().toFixed(4);
    plot();
  }
  requestAnimationFrame(frame);
}

function rotate() {
  const r = rotate_circle(Number($("rot-grid").value), Number($("rot-steps").value));
  draw($("phi"), r.rgba(), r.size());
  $("drift").value = (100 * r.area_drift()).toFixed(2) + " %";
}

function limit() {
  try {
    const l = diffusion_limit(Number($("lim-n").value), Number($("lim-dim").value), Number($("lim-nu").value));
    $("limit").value = Number.isFinite(l) ? l.toExponential(4) : "unbounded";
  } catch (e) {
    $("limit").value = e.message;
  }
}

await init();
$("density").addEventListener("input", () => { $("density-out").value = Number($("density").value).toFixed(1); });
$("density").addEventListener("change", reset);
$("grid").addEventListener("change", reset);
$("reset").addEventListener("click", reset);
$("pause").addEventListener("click", () => {
  running = !running;
  $("pause").textContent = running ? "pause" : "resume";
});
$("rot-steps").addEventListener("input", () => { $("rot-steps-out").value = $("rot-steps").value; });
$("rotate").addEventListener("click", rotate);
for (const id of ["lim-n", "lim-dim", "lim-nu"]) $(id).addEventListener("input", limit);

reset();
rotate();
limit();
requestAnimationFrame(frame);

import init, { Simulation, pressure_curves, relaxation_demo } from "./pkg/semihydro_web.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

// Draws each series [xs, ys, color] on its own vertical scale when `separate`.
function plot(canvas, series, separate) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap(s => s[0]);
  const x0 = Math.min(...all), x1 = Math.max(...all);
  const range = ys => {
    let lo = Math.min(...ys), hi = Math.max(...ys);
    if (hi - lo < 1e-12) { lo -= 1; hi += 1; }
    return [lo, hi];
  };
  const shared = range(series.flatMap(s => Array.from(s[1])));
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(pad, pad / 2, w - 1.5 * pad, h - 1.5 * pad);
  for (const [xs, ys, color] of series) {
    const [lo, hi] = separate ? range(Array.from(ys)) : shared;
    ctx.strokeStyle = color;
    ctx.beginPath();
    xs.forEach((x, i) => {
      const px = pad + (x - x0) / (x1 - x0) * (w - 1.5 * pad);
      const py = h - pad - (ys[i] - lo) / (hi - lo) * (h - 1.5 * pad);
      i ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#555";
  ctx.fillText(x0.toFixed(2), pad, h - 8);
  ctx.fillText(x1.toFixed(2), w - pad - 20, h - 8);
}

let sim = null, running = false;

function frame() {
  if (!running || !sim) return;
  try {
    sim.advance(0.02);
  } catch (e) {
    running = false;
    document.getElementById("run-status").textContent = String(e);
    return;
  }
  const x = sim.x();
  plot(document.getElementById("run"), [
    [x, sim.rho(), COLORS[0]],
    [x, sim.velocity(), COLORS[3]],
    [x, sim.field(), COLORS[2]],
  ], true);
  document.getElementById("run-status").textContent =
    `t = ${sim.time().toFixed(3)}   steps = ${sim.steps()}   sup|E| / bound = ${sim.field_ratio().toFixed(6)}`;
  requestAnimationFrame(frame);
}

function start() {
  const name = document.getElementById("scenario").value;
  const cells = parseInt(document.getElementById("cells").value, 10);
  const eps = parseFloat(document.getElementById("eps").value);
  try {
    sim = new Simulation(name, cells, eps);
  } catch (e) {
    document.getElementById("run-status").textContent = String(e);
    return;
  }
  running = true;
  requestAnimationFrame(frame);
}

function drawPressure() {
  const gamma = parseFloat(document.getElementById("gamma").value);
  const delta = parseFloat(document.getElementById("delta").value);
  let flat;
  try {
    flat = pressure_curves(gamma, delta, 3.0, 200);
  } catch (e) {
    return;
  }
  const rho = [], p = [], p1 = [];
  for (let i = 0; i < flat.length; i += 3) {
    rho.push(flat[i]); p.push(flat[i + 1]); p1.push(flat[i + 2]);
  }
  plot(document.getElementById("pressure"), [[rho, p, COLORS[0]], [rho, p1, COLORS[1]]], false);
}

function runStudy() {
  const tau = parseFloat(document.getElementById("tau").value);
  const cells = parseInt(document.getElementById("relax-cells").value, 10);
  const status = document.getElementById("relax-status");
  status.textContent = "running...";
  setTimeout(() => {
    let out;
    try {
      out = JSON.parse(relaxation_demo(tau, cells, 0.1));
    } catch (e) {
      status.textContent = String(e);
      return;
    }
    const series = [[out.x, out.reference, "#000"]];
    out.final_excess.forEach((n, k) => series.push([out.x, n, COLORS[k]]));
    plot(document.getElementById("relax-plot"), series, false);
    status.textContent = "tau          L1 error     dissipation\n" + out.rows
      .map(r => `${r.tau.toExponential(3)}  ${r.l1_error.toExponential(3)}  ${r.dissipation_integral.toExponential(3)}`)
      .join("\n") + `\nstrictly decreasing: ${out.monotone}`;
  }, 10);
}

await init();
document.getElementById("start").onclick = start;
document.getElementById("pause").onclick = () => {
  running = !running;
  if (running) requestAnimationFrame(frame);
};
document.getElementById("gamma").oninput = drawPressure;
document.getElementById("delta").oninput = drawPressure;
document.getElementById("relax").onclick = runStudy;
drawPressure();

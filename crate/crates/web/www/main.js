import init, { bathResponse, spinBosonSigmaZ, DecayExplorer } from "../pkg/pathlind_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const status = document.getElementById("status");

function plot(canvas, xs, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi - lo < 1e-12) { hi += 1; lo -= 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1] || 1;
  const px = x => pad + (x - x0) / (x1 - x0 || 1) * (w - 2 * pad);
  const py = y => h - pad - (y - lo) / (hi - lo) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, pad + 4);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toFixed(0), pad, h - pad + 14);
  ctx.fillText(`${x1.toFixed(0)} ${xlabel}`, w - pad - 50, h - pad + 14);
  if (lo < 0 && hi > 0) {
    ctx.strokeStyle = "#ddd";
    ctx.beginPath(); ctx.moveTo(pad, py(0)); ctx.lineTo(w - pad, py(0)); ctx.stroke();
  }
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.forEach((v, k) => (k ? ctx.lineTo(px(xs[k]), py(v)) : ctx.moveTo(px(xs[k]), py(v))));
    ctx.stroke();
  });
}

function values(form) {
  return Object.fromEntries([...new FormData(form)].map(([k, v]) => [k, Number(v)]));
}

function guarded(fn) {
  return (ev) => {
    ev?.preventDefault();
    try { fn(); status.textContent = ""; } catch (e) { status.textContent = String(e.message ?? e); }
  };
}

await init();

const bathForm = document.getElementById("bath");
const drawBath = guarded(() => {
  const v = values(bathForm), n = 200;
  const c = bathResponse(v.lambda, v.gamma, v.temp, v.tmax, n);
  const xs = [], re = [], im = [];
  for (let k = 0; k < n; k++) { xs.push(v.tmax * (k + 1) / n); re.push(c[2 * k]); im.push(c[2 * k + 1]); }
  plot(document.getElementById("bath-plot"), xs, [re, im], "fs");
});
bathForm.addEventListener("submit", drawBath);

const sbForm = document.getElementById("sb");
const drawSb = guarded(() => {
  const v = values(sbForm);
  const z = spinBosonSigmaZ(v.eps, v.delta, v.lambda, v.gamma, v.temp, v.dt, v.mem, v.steps);
  plot(document.getElementById("sb-plot"), [...z.keys()].map(k => k * v.dt), [[...z]], "fs");
});
sbForm.addEventListener("submit", drawSb);

// the kernel is solved once; moving the slider only repeats the propagation
const explorer = new DecayExplorer(4);
const decayForm = document.getElementById("decay");
const drawDecay = guarded(() => {
  const v = values(decayForm);
  decayForm.elements["tau-out"].value = v.tau;
  const steps = Math.round(v.tps * 1000 / explorer.dt);
  const p = explorer.populations(v.tau, v.site, steps);
  const xs = [], cols = [[], [], [], []];
  for (let k = 0; k <= steps; k++) {
    xs.push(k * explorer.dt / 1000);
    for (let i = 0; i < 4; i++) cols[i].push(p[4 * k + i]);
  }
  plot(document.getElementById("decay-plot"), xs, cols, "ps");
});
decayForm.addEventListener("input", drawDecay);

drawBath();
drawSb();
drawDecay();

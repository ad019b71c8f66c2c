import init, { e_transform_curve, free_energy_curve, se_trajectory, irrep_names } from "./pkg/groupsync_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f"];
const status = document.getElementById("status");
const val = (id) => document.getElementById(id).value.trim();
const num = (id) => Number(val(id));

// series: [{ name, xs, ys, lo?, hi? }]
function plot(canvas, series, xlabel) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const all = series.flatMap((s) => [...s.ys, ...(s.lo || []), ...(s.hi || [])]).filter(Number.isFinite);
  const xs = series.flatMap((s) => s.xs);
  let [y0, y1] = [Math.min(...all), Math.max(...all)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const X = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (W - 2 * pad);
  const Y = (y) => H - pad - ((y - y0) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillText(x0.toPrecision(3), pad, H - pad + 14);
  ctx.fillText(x1.toPrecision(3), W - pad - 20, H - pad + 14);
  ctx.fillText(xlabel, W / 2, H - 8);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, H - pad);

  series.forEach((s, i) => {
    const c = COLORS[i % COLORS.length];
    if (s.lo) {
      ctx.fillStyle = c + "33";
      ctx.beginPath();
      s.xs.forEach((x, j) => (j ? ctx.lineTo(X(x), Y(s.hi[j])) : ctx.moveTo(X(x), Y(s.hi[j]))));
      for (let j = s.xs.length - 1; j >= 0; j--) ctx.lineTo(X(s.xs[j]), Y(s.lo[j]));
      ctx.fill();
    }
    ctx.strokeStyle = c;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.xs.forEach((x, j) => (j ? ctx.lineTo(X(x), Y(s.ys[j])) : ctx.moveTo(X(x), Y(s.ys[j]))));
    ctx.stroke();
    ctx.fillStyle = c;
    ctx.fillText(s.name, W - pad - 90, pad + 14 + 14 * i);
  });
}

function guarded(fn) {
  return () => {
    status.textContent = "computing…";
    // let the status repaint before the synchronous call
    setTimeout(() => {
      const t = performance.now();
      try {
        fn();
        status.textContent = `done in ${((performance.now() - t) / 1000).toFixed(2)} s`;
      } catch (e) {
        status.textContent = `error: ${e.message || e}`;
      }
    }, 10);
  };
}

function eCurves() {
  const cmax = num("e-cmax"), n = 121;
  const xs = Array.from({ length: n }, (_, i) => (cmax * i) / (n - 1));
  const series = val("e-groups").split(",").map((g) => g.trim()).filter(Boolean)
    .map((g) => ({ name: g, xs, ys: Array.from(e_transform_curve(g, 1, cmax, n)) }));
  plot(document.getElementById("e-plot"), series, "c");
}

function freeEnergy() {
  const gmax = num("f-gmax"), n = 61;
  const raw = free_energy_curve(val("f-group"), num("f-k"), num("f-lambda"), gmax, n, 20000, 1n);
  const xs = [], ys = [], lo = [], hi = [];
  for (let i = 0; i < n; i++) {
    const f = raw[2 * i], se = raw[2 * i + 1];
    xs.push((gmax * i) / (n - 1));
    ys.push(f);
    lo.push(f - 2 * se);
    hi.push(f + 2 * se);
  }
  plot(document.getElementById("f-plot"), [{ name: `λ = ${val("f-lambda")}`, xs, ys, lo, hi }], "t");
}

function trajectory() {
  const [g, k] = [val("t-group"), num("t-k")];
  const names = irrep_names(g, k);
  const flat = se_trajectory(g, k, num("t-lambda"), num("t-g0"), 300, 20000, 1n);
  const m = names.length, steps = flat.length / m;
  const xs = Array.from({ length: steps }, (_, i) => i);
  const series = names.map((name, r) => ({ name: `γ ${name}`, xs, ys: xs.map((i) => flat[i * m + r]) }));
  plot(document.getElementById("t-plot"), series, "iteration");
}

await init();
document.getElementById("e-run").onclick = guarded(eCurves);
document.getElementById("f-run").onclick = guarded(freeEnergy);
document.getElementById("t-run").onclick = guarded(trajectory);
guarded(eCurves)();

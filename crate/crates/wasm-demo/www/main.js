import init, { kernel_curves, scattering_tree, stability_curve } from "./pkg/stgst_wasm.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, xs, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 36;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.ys).filter(Number.isFinite);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = opts.ymin ?? Math.min(0, ...all), y1 = Math.max(...all, y0 + 1e-12);
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 24, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width ?? 1.5;
    ctx.setLineDash(s.dash ?? []);
    ctx.beginPath();
    let started = false;
    xs.forEach((x, i) => {
      if (!Number.isFinite(s.ys[i])) return;
      started ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]));
      started = true;
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
  for (const m of opts.marks ?? []) {
    ctx.fillStyle = "#000";
    ctx.fillRect(px(m) - 1, h - pad - 6, 2, 6);
  }
}

function guard(fn) {
  return () => {
    try {
      $("error").textContent = "";
      fn();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

const drawKernels = guard(() => {
  const d = JSON.parse(kernel_curves($("k-family").value, num("k-scales"), 400));
  const series = d.curves.map((ys, j) => ({ ys, color: COLORS[j % COLORS.length] }));
  series.push({ ys: d.energy, color: "#000", dash: [4, 3], width: 1 });
  plot($("k-canvas"), d.lambda, series, { marks: d.eigenvalues });
  $("k-info").textContent = d.frame
    ? `frame bounds on the skeleton graph: A = ${d.frame.lower.toFixed(4)}, B = ${d.frame.upper.toFixed(4)} (dashed: sum of squares)`
    : "dashed: sum of squares";
});

const drawTree = guard(() => {
  const d = JSON.parse(scattering_tree(num("t-js"), num("t-jt"), num("t-layers"), num("t-label"), num("t-seed")));
  const t = d.signal[0].length;
  const xs = [...Array(t).keys()];
  plot($("t-signal"), xs, d.signal.map((ys, i) => ({ ys, color: COLORS[i % COLORS.length], width: 1 })));
  const ctx = $("t-canvas").getContext("2d");
  const w = $("t-canvas").width, h = $("t-canvas").height;
  ctx.clearRect(0, 0, w, h);
  const layers = Math.max(...d.nodes.map((n) => n.layer)) + 1;
  const maxE = Math.max(...d.nodes.map((n) => n.energy));
  for (let l = 0; l < layers; l++) {
    const row = d.nodes.filter((n) => n.layer === l);
    const y = 30 + (l * (h - 60)) / Math.max(1, layers - 1);
    row.forEach((n, i) => {
      const x = ((i + 0.5) * w) / row.length;
      const r = 3 + 14 * Math.sqrt(n.energy / maxE);
      ctx.fillStyle = COLORS[l % COLORS.length];
      ctx.beginPath();
      ctx.arc(x, y, r, 0, 2 * Math.PI);
      ctx.fill();
      if (row.length <= 6) {
        ctx.fillStyle = "#222";
        ctx.font = "11px sans-serif";
        ctx.fillText(n.path, x + r + 3, y + 4);
      }
    });
  }
});

const drawStability = guard(() => {
  const d = JSON.parse(stability_curve($("s-kind").value, num("s-seed")));
  plot($("s-canvas"), d.x, [
    { ys: d.lhs, color: COLORS[0] },
    { ys: d.rhs, color: COLORS[3], dash: [6, 4] },
  ]);
});

await init();
for (const id of ["k-family", "k-scales"]) $(id).addEventListener("input", drawKernels);
for (const id of ["t-js", "t-jt", "t-layers", "t-label", "t-seed"]) $(id).addEventListener("input", drawTree);
for (const id of ["s-kind", "s-seed"]) $(id).addEventListener("input", drawStability);
drawKernels();
drawTree();
drawStability();

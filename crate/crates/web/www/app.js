import init, { boxplot_demo, retrieval_demo } from "./pkg/mmhash_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(ctx, w, h, pad, lo, hi, title) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#222";
  ctx.fillText(title, pad, pad - 8);
  ctx.fillText(hi.toFixed(2), 4, pad + 4);
  ctx.fillText(lo.toFixed(2), 4, h - pad);
}

function drawBoxplot(table) {
  const c = $("bp-canvas"), ctx = c.getContext("2d");
  const pad = 40, w = c.width, h = c.height;
  const all = table.groups.flatMap((g) => [g.stats.min, g.stats.max]);
  const lo = Math.min(...all), hi = Math.max(...all);
  const y = (v) => h - pad - ((v - lo) / (hi - lo || 1)) * (h - 2 * pad);
  frame(ctx, w, h, pad, lo, hi, "mean similarity to positive (in) and negative (out) centers");
  const slot = (w - 2 * pad) / table.groups.length;
  table.groups.forEach((g, i) => {
    const cx = pad + slot * (i + 0.5), bw = slot * 0.35, s = g.stats;
    ctx.strokeStyle = g.subset === "clean" ? "#1f6feb" : "#d1242f";
    ctx.beginPath();
    ctx.moveTo(cx, y(s.min)); ctx.lineTo(cx, y(s.q1));
    ctx.moveTo(cx, y(s.q3)); ctx.lineTo(cx, y(s.max));
    ctx.moveTo(cx - bw / 2, y(s.median)); ctx.lineTo(cx + bw / 2, y(s.median));
    ctx.stroke();
    ctx.strokeRect(cx - bw / 2, y(s.q3), bw, y(s.q1) - y(s.q3));
    ctx.fillStyle = "#222";
    ctx.fillText(`${g.subset} ${g.side} (${g.count})`, cx - bw / 2, h - pad + 16);
  });
}

function drawPr(res) {
  const c = $("rt-canvas"), ctx = c.getContext("2d");
  const pad = 40, w = c.width, h = c.height;
  frame(ctx, w, h, pad, 0, 1, "precision (y) against recall (x), one point per Hamming radius");
  const x = (r) => pad + r * (w - 2 * pad), y = (p) => h - pad - p * (h - 2 * pad);
  ctx.strokeStyle = "#1f6feb";
  ctx.beginPath();
  res.pr.forEach((pt, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, x(pt.recall), y(pt.precision)));
  ctx.stroke();
  res.pr.forEach((pt) => ctx.fillRect(x(pt.recall) - 2, y(pt.precision) - 2, 4, 4));
}

function run(button, out, body) {
  $(button).addEventListener("click", () => {
    $(out).className = "";
    $(out).textContent = "running...";
    // let the status paint before the synchronous wasm call
    setTimeout(() => {
      try {
        body();
      } catch (e) {
        $(out).className = "err";
        $(out).textContent = String(e.message ?? e);
      }
    }, 10);
  });
}

await init();

run("bp-run", "bp-out", () => {
  const t0 = performance.now();
  const table = JSON.parse(boxplot_demo(num("bp-n"), num("bp-tau"), num("bp-warm"), num("bp-seed")));
  drawBoxplot(table);
  const gap = (s) => {
    const m = (side) => table.groups.find((g) => g.subset === s && g.side === side)?.stats.median;
    return (m("in") - m("out")).toFixed(3);
  };
  $("bp-out").textContent =
    `median gap clean ${gap("clean")}, noisy ${gap("noisy")} ` +
    `(${(performance.now() - t0).toFixed(0)} ms)` +
    (table.omitted.length ? `\nomitted: ${table.omitted.join("; ")}` : "");
});

run("rt-run", "rt-out", () => {
  const t0 = performance.now();
  const res = JSON.parse(retrieval_demo($("rt-variant").value, num("rt-tau"), num("rt-epochs"), num("rt-seed")));
  drawPr(res);
  const pn = res.pn.map(([n, p]) => `P@${n} ${p.toFixed(3)}`).join(", ");
  $("rt-out").textContent =
    `MAP ${res.map.toFixed(4)}\n${pn}\n` +
    `filter precision ${res.filter_precision?.toFixed(3) ?? "n/a"}, ` +
    `relabel accuracy ${res.correction_accuracy?.toFixed(3) ?? "n/a"} ` +
    `(${(performance.now() - t0).toFixed(0)} ms)`;
});

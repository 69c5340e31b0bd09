import init, { simulate, power_curve, bound_slice } from "./pkg/cobeam_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function frame(ctx, xs, ys, opts = {}) {
  const { width: w, height: h } = ctx.canvas;
  const pad = { l: 52, r: 12, t: 12, b: 32 };
  const logx = opts.logx ?? false;
  const tx = logx ? Math.log10 : (v) => v;
  const [x0, x1] = [Math.min(...xs.map(tx)), Math.max(...xs.map(tx))];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const my = (y1 - y0) * 0.05;
  y0 -= my; y1 += my;
  const sx = (v) => pad.l + ((tx(v) - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r);
  const sy = (v) => h - pad.b - ((v - y0) / (y1 - y0)) * (h - pad.t - pad.b);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t); ctx.lineTo(pad.l, h - pad.b); ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const v = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(v.toPrecision(3), 4, sy(v) + 4);
    const u = x0 + ((x1 - x0) * i) / 4;
    const label = logx ? `1e${u.toFixed(1)}` : u.toPrecision(3);
    ctx.fillText(label, pad.l + ((u - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r) - 10, h - 12);
  }
  if (opts.xlabel) ctx.fillText(opts.xlabel, w - pad.r - 120, h - 1);
  return { sx, sy };
}

function line(ctx, s, xs, ys, color, dots = false) {
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(s.sx(x), s.sy(ys[i])) : ctx.moveTo(s.sx(x), s.sy(ys[i]))));
  ctx.stroke();
  if (dots) xs.forEach((x, i) => ctx.fillRect(s.sx(x) - 2, s.sy(ys[i]) - 2, 4, 4));
  ctx.lineWidth = 1;
}

function drawTopology(v) {
  const ctx = $("topo").getContext("2d");
  const { width: w, height: h } = ctx.canvas;
  const pts = v.bs_positions.concat(v.user_positions);
  const span = Math.max(...pts.map(([x, y]) => Math.max(Math.abs(x), Math.abs(y)))) * 1.1 || 1;
  const cx = pts.reduce((a, p) => a + p[0], 0) / pts.length;
  const cy = pts.reduce((a, p) => a + p[1], 0) / pts.length;
  const px = ([x, y]) => [w / 2 + ((x - cx) / span) * (w / 2), h / 2 - ((y - cy) / span) * (h / 2)];
  ctx.clearRect(0, 0, w, h);
  v.bs_positions.forEach((p, i) => {
    const [x, y] = px(p);
    const cell = v.coordinated.indexOf(i);
    ctx.fillStyle = cell >= 0 ? COLORS[cell % COLORS.length] : "#bbb";
    ctx.beginPath();
    ctx.moveTo(x, y - 7); ctx.lineTo(x + 6, y + 5); ctx.lineTo(x - 6, y + 5);
    ctx.fill();
  });
  v.user_positions.forEach((p, u) => {
    const cell = Math.floor(u / v.users_per_cell);
    const [x, y] = px(p);
    const [bx, by] = px(v.bs_positions[v.coordinated[cell]]);
    ctx.strokeStyle = COLORS[cell % COLORS.length] + "55";
    ctx.beginPath(); ctx.moveTo(bx, by); ctx.lineTo(x, y); ctx.stroke();
    ctx.fillStyle = COLORS[cell % COLORS.length];
    ctx.beginPath(); ctx.arc(x, y, 2.5, 0, 2 * Math.PI); ctx.fill();
  });
}

function runSimulation() {
  showError();
  try {
    const v = JSON.parse(simulate(num("sim-m"), num("sim-n"), num("sim-k"), num("sim-snr"), BigInt(num("sim-seed"))));
    drawTopology(v);
    const ctx = $("conv").getContext("2d");
    const flat = [v.mf].concat(v.sbf.rates, v.icbf.rates, v.zf ?? []);
    const units = v.sbf.units.concat(v.icbf.units);
    const s = frame(ctx, [0, Math.max(...units, 1)], flat, { xlabel: "backhaul units" });
    line(ctx, s, v.sbf.units, v.sbf.rates, COLORS[0], true);
    line(ctx, s, v.icbf.units, v.icbf.rates, COLORS[1], true);
    const xmax = Math.max(...units, 1);
    line(ctx, s, [0, xmax], [v.mf, v.mf], "#888");
    if (v.zf !== null) line(ctx, s, [0, xmax], [v.zf, v.zf], "#bbb");
    const last = (t) => t.rates[t.rates.length - 1].toFixed(3);
    $("sim-legend").innerHTML =
      `<span><i class="sw" style="background:${COLORS[0]}"></i>S-BF ${last(v.sbf)} b/s/Hz, ${v.sbf.units.at(-1)} units</span>` +
      `<span><i class="sw" style="background:${COLORS[1]}"></i>ICBF ${last(v.icbf)}, ${v.icbf.units.at(-1)} units</span>` +
      `<span><i class="sw" style="background:#888"></i>MF ${v.mf.toFixed(3)}</span>` +
      `<span><i class="sw" style="background:#bbb"></i>ZF ${v.zf === null ? "n/a (N > K)" : v.zf.toFixed(3)}</span>`;
  } catch (e) {
    showError(e);
  }
}

function runPowerCurve() {
  showError();
  try {
    const v = JSON.parse(power_curve(BigInt(num("pc-seed")), num("pc-k"), num("pc-budget"), 120));
    const ctx = $("pc").getContext("2d");
    const s = frame(ctx, v.mu, v.power.concat([v.budget]), { logx: true, xlabel: "multiplier μ (log)" });
    line(ctx, s, v.mu, v.power, COLORS[0]);
    line(ctx, s, [v.mu[0], v.mu.at(-1)], [v.budget, v.budget], "#aaa");
    if (v.mu_star > 0) {
      ctx.fillStyle = COLORS[1];
      ctx.beginPath(); ctx.arc(s.sx(v.mu_star), s.sy(v.power_used), 5, 0, 2 * Math.PI); ctx.fill();
    }
    $("pc-legend").textContent =
      `Tr W*(μ) against the budget. μ* = ${v.mu_star.toPrecision(6)}, power ${v.power_used.toPrecision(6)}, ` +
      `bound gain ${v.objective.toPrecision(5)}, ${v.iterations} solves` + (v.mu_star === 0 ? " (budget slack, μ* = 0)" : "");
  } catch (e) {
    showError(e);
  }
}

function runSlice() {
  showError();
  try {
    const v = JSON.parse(bound_slice(BigInt(num("bs-seed")), num("bs-k"), 80));
    const ctx = $("slice").getContext("2d");
    const s = frame(ctx, v.t, v.rate.concat(v.bound), { xlabel: "t along segment" });
    line(ctx, s, v.t, v.rate, COLORS[0]);
    line(ctx, s, v.t, v.bound, COLORS[1]);
  } catch (e) {
    showError(e);
  }
}

await init();
$("sim-run").onclick = runSimulation;
$("pc-run").onclick = runPowerCurve;
$("bs-run").onclick = runSlice;
runSimulation();
runPowerCurve();
runSlice();

import init, { analyze, kyp_check, dissipation } from "./pkg/kyp_wasm.js";

const PRESETS = {
  "scalar": { A: [[0.5]], B: [[1]], C: [[0.25]], D: [[0]] },
  "two-state": { A: [[0.4, 0.1], [0.0, -0.3]], B: [[1.0], [0.5]], C: [[0.3, -0.2]], D: [[0.1]] },
  "resonant": { A: [[0.8, 0.3], [-0.3, 0.8]], B: [[0.0], [1.0]], C: [[0.15, 0.0]], D: [[0.0]] },
  "two-input": { A: [[0.6, 0.0], [0.2, -0.5]], B: [[0.5, 0.0], [0.0, 0.5]], C: [[0.4, 0.3]], D: [[0.2, 0.1]] },
};

const $ = (id) => document.getElementById(id);
let state = null;

function num(v) {
  return typeof v === "string" ? Number(v.replace("inf", "Infinity")) : v;
}

function fmt(v) {
  return Number.isFinite(v) ? v.toPrecision(6) : String(v);
}

// Entries are numbers or [re, im] pairs.
function mix(ha, hr, t) {
  const part = (z, k) => (Array.isArray(z) ? z[k] : k === 0 ? z : 0);
  return ha.map((row, i) => row.map((a, j) => {
    const b = hr[i][j];
    const re = (1 - t) * part(a, 0) + t * part(b, 0);
    const im = (1 - t) * part(a, 1) + t * part(b, 1);
    return im === 0 ? re : [re, im];
  }));
}

function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y).concat(opts.hlines || []).filter(Number.isFinite);
  if (!xs.length || !ys.length) return;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(0, ...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  const pad = 30;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.fillText(fmt(y1), 2, pad - 6);
  ctx.fillText(fmt(y0), 2, h - 8);
  ctx.fillText(opts.xlabel || "", w - pad - 60, h - 8);
  for (const y of opts.hlines || []) {
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(pad, py(y));
    ctx.lineTo(w - pad, py(y));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, pad + 8, pad + 16 + 16 * k);
  });
}

function runAnalyze() {
  const text = $("system").value;
  const r = JSON.parse(analyze(text, 256));
  if (r.error) {
    state = null;
    $("summary").textContent = `${r.error.code}: ${r.error.message}`;
    $("kyp").textContent = "";
    $("trace-summary").textContent = "";
    return;
  }
  const lines = [
    `n=${r.n} m=${r.m} p=${r.p}  spectral radius ${fmt(num(r.spectral_radius))}  minimal ${r.minimal}`,
    `H-infinity norm ${fmt(num(r.hinf))}` + (r.hinf_theta !== undefined ? ` at theta ${fmt(r.hinf_theta)}` : ""),
  ];
  if (r.available) {
    lines.push(`H_a ${JSON.stringify(r.available.H)}  horizon ${r.available.horizon}`);
    lines.push(`H_r ${JSON.stringify(r.required.H)}  horizon ${r.required.horizon}`);
  } else if (r.storage_error) {
    lines.push(`no storage certificates: ${r.storage_error.message}`);
  }
  $("summary").textContent = lines.join("\n");
  if (r.response) {
    plot($("gain"), [{ x: r.response.theta, y: r.response.gain.map(num), color: "#1f5fa8", label: "max singular value of F(e^{i theta})" }],
      { hlines: [1], xlabel: "theta in [0, pi]" });
  }
  state = r.available ? { text, ha: r.available.H, hr: r.required.H, n: r.n } : null;
  if (state && $("x0").dataset.n !== String(r.n)) {
    $("x0").value = JSON.stringify(Array.from({ length: r.n }, (_, i) => (i === 0 ? 1 : 0)));
    $("x0").dataset.n = String(r.n);
  }
  runKyp();
}

function candidate() {
  const t = Number($("mix").value);
  $("mix-value").textContent = t.toFixed(2);
  return JSON.stringify(mix(state.ha, state.hr, t));
}

function runKyp() {
  if (!state) return;
  const h = candidate();
  const flavor = $("flavor").value;
  const delta = flavor === "strict" ? Number($("delta").value) : 0;
  const r = JSON.parse(kyp_check(state.text, h, flavor, delta));
  const el = $("kyp");
  if (r.error) {
    el.className = "bad";
    el.textContent = `${r.error.code}: ${r.error.message}`;
  } else {
    el.className = r.feasible ? "ok" : "bad";
    el.textContent = `H = ${h}\n${r.flavor}: ${r.feasible ? "feasible" : "infeasible"}  min eigenvalue ${fmt(num(r.min_eig))}`;
  }
  runTrace(h);
}

function runTrace(h) {
  const steps = Math.max(1, Math.min(2000, Number($("steps").value) | 0));
  const seed = Math.max(0, Number($("seed").value) | 0);
  const r = JSON.parse(dissipation(state.text, h, $("x0").value, steps, seed));
  if (r.error) {
    $("trace-summary").textContent = `${r.error.code}: ${r.error.message}`;
    return;
  }
  const storage = r.storage.map(num);
  const bound = [storage[0]];
  r.supply.map(num).forEach((s) => bound.push(bound[bound.length - 1] + s));
  const k = storage.map((_, i) => i);
  plot($("trace"), [
    { x: k, y: storage, color: "#1f5fa8", label: "H(x_k)" },
    { x: k, y: bound, color: "#c0651a", label: "H(x_0) + supply so far" },
  ], { xlabel: "step k" });
  const worst = num(r.max_residual);
  $("trace-summary").className = worst <= 1e-9 ? "ok" : "bad";
  $("trace-summary").textContent = `largest one-step residual ${fmt(worst)} (non-positive means the balance holds)`;
}

await init();
for (const name of Object.keys(PRESETS)) $("preset").add(new Option(name, name));
const loadPreset = () => {
  $("system").value = JSON.stringify(PRESETS[$("preset").value], null, 1);
  runAnalyze();
};
$("preset").addEventListener("change", loadPreset);
$("analyze").addEventListener("click", runAnalyze);
$("mix").addEventListener("input", runKyp);
$("flavor").addEventListener("change", runKyp);
$("delta").addEventListener("input", runKyp);
for (const id of ["x0", "steps", "seed"]) $(id).addEventListener("change", runKyp);
$("reseed").addEventListener("click", () => {
  $("seed").value = String((Number($("seed").value) + 1) >>> 0);
  runKyp();
});
loadPreset();

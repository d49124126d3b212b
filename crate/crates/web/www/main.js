import init, { poseEdof, pieceSupports, splitSpectrum } from "./pkg/holodof_web.js";

const num = (form, name) => Number(form.querySelector(`[name=${name}]`).value);

function show(el, text, error = false) {
  el.textContent = text;
  el.className = error ? "err" : "";
}

function call(f, input, out) {
  try {
    return JSON.parse(f(JSON.stringify(input)));
  } catch (e) {
    show(out, String(e), true);
    return null;
  }
}

function poseInput() {
  const f = document.getElementById("pose");
  const keys = ["distance_lambda", "theta_deg", "phi_deg", "alpha_deg", "beta_deg", "tx_side_lambda", "rx_side_lambda"];
  return Object.fromEntries(keys.map((k) => [k, num(f, k)]));
}

function splitInput() {
  const f = document.getElementById("split");
  return {
    center_lambda: [num(f, "cx"), num(f, "cy"), num(f, "cz")],
    tx_side_lambda: num(f, "tx_side_lambda"),
    rx_side_lambda: [num(f, "ru"), num(f, "rv")],
    n_u: num(f, "n_u"),
    n_v: num(f, "n_v"),
    gamma: num(f, "gamma"),
    points_per_lambda: num(f, "points_per_lambda"),
  };
}

function runPose() {
  const out = document.getElementById("pose-out");
  const r = call(poseEdof, poseInput(), out);
  if (!r) return;
  const fmt = (x, d = 3) => (x === null ? "n/a" : x.toFixed(d));
  show(out, [
    `upsilon          ${fmt(r.upsilon, 4)}`,
    `count            ${fmt(r.edof)} (rounded ${r.edof_rounded})`,
    `best orientation alpha ${fmt(r.optimal_alpha_deg, 1)} deg, beta ${fmt(r.optimal_beta_deg, 1)} deg`,
    `count there      ${fmt(r.optimal_edof)}`,
    `size/distance    ${r.valid ? "valid" : "outside the comfortable range"}`,
  ].join("\n"));
}

function drawSupports(r) {
  const c = document.getElementById("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const s = Math.min(c.width, c.height) / 2.4;
  const cx = c.width / 2, cy = c.height / 2;
  g.strokeStyle = "#999";
  g.beginPath();
  g.arc(cx, cy, s, 0, 2 * Math.PI);
  g.stroke();
  const included = new Set(r.included);
  r.supports.forEach((p, i) => {
    g.beginPath();
    p.vertices.forEach(([u, v], k) => (k ? g.lineTo : g.moveTo).call(g, cx + u * s, cy - v * s));
    g.closePath();
    g.fillStyle = included.has(i) ? "rgba(30, 90, 200, 0.35)" : "rgba(120, 120, 120, 0.2)";
    g.fill();
    g.strokeStyle = "#234";
    g.stroke();
  });
}

function drawSpectrum(r) {
  const c = document.getElementById("plot");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const n = r.normalized.length;
  const h = c.height - 20, w = (c.width - 20) / Math.max(n, 1);
  const ymax = Math.max(1.1, ...r.normalized);
  g.strokeStyle = "#c60";
  for (const l of r.levels) {
    const y = 10 + h * (1 - l / ymax);
    g.beginPath();
    g.moveTo(10, y);
    g.lineTo(c.width - 10, y);
    g.stroke();
  }
  g.fillStyle = "#235";
  r.normalized.forEach((e, i) => {
    const y = 10 + h * (1 - e / ymax);
    g.fillRect(10 + i * w, y, Math.max(w - 1, 1), 10 + h - y);
  });
}

function runSupports() {
  const out = document.getElementById("split-out");
  const r = call(pieceSupports, splitInput(), out);
  if (!r) return;
  show(out, `count ${r.edof.toFixed(3)} from ${r.included.length} pieces; overlapping support ${(100 * r.overlap_fraction).toFixed(2)}%\n(axes in units of the free-space wavenumber; circle is the visible region)`);
  drawSupports(r);
}

function runSpectrum() {
  const out = document.getElementById("split-out");
  show(out, "computing...");
  setTimeout(() => {
    const r = call(splitSpectrum, splitInput(), out);
    if (!r) return;
    show(out, `${r.nodes} Tx nodes; ${r.count} eigenvalues above gamma; closed form ${r.closed_form.toFixed(3)}\n(bars: eigenvalues over the largest piece norm; lines: piece norms)`);
    drawSpectrum(r);
  }, 0);
}

await init();
document.getElementById("pose-run").addEventListener("click", runPose);
document.getElementById("split-supports").addEventListener("click", runSupports);
document.getElementById("split-spectrum").addEventListener("click", runSpectrum);
runPose();

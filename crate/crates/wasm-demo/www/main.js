import init, { design_filter, frequency_response, compare } from "./pkg/arma_wls_demo.js";

const COLORS = ["#1f5fbf", "#c0392b", "#2e8b57"];
const DB_FLOOR = -100;
const $ = (id) => document.getElementById(id);

function readSpec() {
  const spec = {};
  for (const input of $("spec").querySelectorAll("input")) {
    const v = Number(input.value);
    spec[input.name] = ["order_p", "order_q", "grid_l", "k_max"].includes(input.name) ? Math.round(v) : v;
  }
  return spec;
}

function setStatus(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

// Runs after a paint so the status text shows before a long design blocks the thread.
function busy(text, work) {
  setStatus(text);
  requestAnimationFrame(() => setTimeout(() => {
    const t0 = performance.now();
    try {
      work();
      setStatus(`done in ${((performance.now() - t0) / 1000).toFixed(2)} s`);
    } catch (e) {
      setStatus(String(e), true);
    }
  }));
}

function plot(canvas, series, { xRange, yRange, logY = false, xLabel, yLabel, marks = [] }) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 56, r: 12, t: 10, b: 30 };
  const ty = (y) => (logY ? Math.log10(y) : y);
  const [y0, y1] = yRange.map(ty);
  const sx = (x) => pad.l + ((x - xRange[0]) / (xRange[1] - xRange[0])) * (w - pad.l - pad.r);
  const sy = (y) => pad.t + (1 - (ty(y) - y0) / (y1 - y0)) * (h - pad.t - pad.b);

  ctx.clearRect(0, 0, w, h);
  ctx.font = "11px system-ui";
  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#555";
  for (let i = 0; i <= 5; i++) {
    const yv = y0 + ((y1 - y0) * i) / 5;
    const py = sy(logY ? 10 ** yv : yv);
    ctx.beginPath(); ctx.moveTo(pad.l, py); ctx.lineTo(w - pad.r, py); ctx.stroke();
    ctx.fillText(logY ? `1e${yv.toFixed(1)}` : yv.toFixed(0), 4, py + 4);
  }
  for (let i = 0; i <= 8; i++) {
    const xv = xRange[0] + ((xRange[1] - xRange[0]) * i) / 8;
    ctx.fillText(Number.isInteger(xv) ? String(xv) : xv.toFixed(2), sx(xv) - 8, h - 14);
  }
  ctx.fillText(xLabel, w - pad.r - 60, h - 2);
  ctx.fillText(yLabel, pad.l + 4, pad.t + 10);

  ctx.strokeStyle = "#999";
  ctx.setLineDash([2, 3]);
  for (const m of marks) {
    ctx.beginPath(); ctx.moveTo(sx(m), pad.t); ctx.lineTo(sx(m), h - pad.b); ctx.stroke();
  }

  series.forEach((s, i) => {
    ctx.strokeStyle = s.color ?? COLORS[i % COLORS.length];
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.x.forEach((x, j) => {
      const y = Math.min(Math.max(s.y[j], yRange[0]), yRange[1]);
      j ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
    });
    ctx.stroke();
  });
  ctx.setLineDash([]);
}

let responseSeries = [];

function drawResponse() {
  const spec = readSpec();
  plot($("response"), responseSeries, {
    xRange: [0, 2], yRange: [DB_FLOOR, 10], xLabel: "λ", yLabel: "|H| (dB)",
    marks: [spec.lambda_p, spec.lambda_s],
  });
}

function drawTraces(traces) {
  const all = traces.flatMap((t) => t.trace.map((p) => p.objective)).filter((v) => v > 0);
  if (!all.length) return;
  const kMax = Math.max(...traces.map((t) => t.trace.length), 2);
  plot($("trace"), traces.map((t) => ({
    x: t.trace.map((p) => p.k), y: t.trace.map((p) => p.objective),
  })), {
    xRange: [1, kMax], yRange: [Math.min(...all), Math.max(...all)], logY: true,
    xLabel: "k", yLabel: "J",
  });
}

function showMetrics(rows) {
  const body = $("metrics").querySelector("tbody");
  body.innerHTML = "";
  for (const [name, out] of rows) {
    const m = out.metrics;
    const tr = document.createElement("tr");
    const status = out.converged ? "" : " (not converged)";
    for (const cell of [name, m.delta_p_db.toFixed(4), m.delta_s_db.toFixed(2), m.sse_db.toFixed(2),
      m.objective.toExponential(4), out.iterations + status, out.stability_margin.toExponential(3)]) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    body.appendChild(tr);
  }
  $("metrics").hidden = false;
}

function showCoefficients(c) {
  $("coeffs").value = JSON.stringify(c, null, 1);
}

const curveSeries = (curve, extra = {}) => ({ x: curve.lambda, y: curve.mag_db, ...extra });

$("design").onclick = () => busy("designing…", () => {
  const out = JSON.parse(design_filter(JSON.stringify(readSpec())));
  responseSeries = [curveSeries(out.response)];
  drawResponse();
  drawTraces([out]);
  showMetrics([["proposed", out]]);
  showCoefficients(out.coefficients);
});

$("compare").onclick = () => busy("designing both…", () => {
  const out = JSON.parse(compare(JSON.stringify(readSpec())));
  responseSeries = [curveSeries(out.proposed.response), curveSeries(out.modified_error.response)];
  drawResponse();
  drawTraces([out.proposed]);
  showMetrics([["proposed", out.proposed], ["modified error", out.modified_error]]);
  showCoefficients(out.proposed.coefficients);
});

$("evaluate").onclick = () => busy("evaluating…", () => {
  const curve = JSON.parse(frequency_response($("coeffs").value, 401));
  responseSeries = [...responseSeries.filter((s) => !s.dashed), curveSeries(curve, { dashed: true, color: "#333" })];
  drawResponse();
});

init().then(() => setStatus("ready"), (e) => setStatus(`failed to load module: ${e}`, true));

// Page logic for the in-browser matcher demo. Holds one Demo instance and
// repaints the loss chart, corpus list and attention views from the JSON
// replies its methods return.

import init, { Demo } from "./pkg/musem_wasm.js";

const $ = (id) => document.getElementById(id);

let demo = null;
let losses = [];
let valF1 = null;

function showError(err) {
  $("error").textContent = err ? String(err.message ?? err) : "";
}

function rebuild() {
  const seed = Number($("seed").value) >>> 0;
  try {
    demo = new Demo(seed, $("variant").value, $("pooling").value);
    losses = [];
    valF1 = null;
    showError(null);
    $("result").hidden = true;
    renderCorpus();
    renderTrainStatus();
    drawLossChart();
  } catch (err) {
    showError(err);
  }
}

function train(n) {
  if (!demo) return;
  try {
    const reply = JSON.parse(demo.trainEpochs(n));
    for (const line of reply.epochs) {
      losses.push(line.train_loss);
      valF1 = line.val_macro_f1;
    }
    renderTrainStatus(reply);
    drawLossChart();
    showError(null);
  } catch (err) {
    showError(err);
  }
}

function renderTrainStatus(reply) {
  const el = $("train-status");
  if (losses.length === 0) {
    el.textContent = "untrained";
    return;
  }
  const sizes = reply ? ` — ${reply.train_size} train / ${reply.val_size} validation examples` : "";
  el.textContent =
    `${losses.length} epochs — training loss ${losses.at(-1).toFixed(4)}, ` +
    `validation macro F1 ${valF1.toFixed(3)}${sizes}`;
}

function renderCorpus() {
  const list = $("corpus");
  list.textContent = "";
  for (const e of JSON.parse(demo.corpusPreview())) {
    const row = document.createElement("div");
    const tag = document.createElement("span");
    tag.className = e.label === 1 ? "tag incongruent" : "tag";
    tag.textContent = e.label === 1 ? "incongruent" : "congruent";
    const text = document.createElement("span");
    text.textContent = `${e.headline} — ${e.body}`;
    row.append(tag, text);
    row.addEventListener("click", () => {
      $("headline").value = e.headline;
      $("body").value = e.body;
      $("synthetic").value = "";
      analyze();
    });
    list.append(row);
  }
}

function analyze() {
  if (!demo) return;
  try {
    const r = JSON.parse(
      demo.analyze($("headline").value, $("body").value, $("synthetic").value),
    );
    showError(null);
    $("result").hidden = false;
    const pct = (r.p_incongruent * 100).toFixed(1);
    $("verdict").textContent =
      (r.label === 1 ? "incongruent" : "congruent") +
      ` — p(incongruent) = ${pct}% after ${r.epochs_run} epochs`;
    $("prob-bar").firstElementChild.style.width = `${r.p_congruent * 100}%`;
    $("prob-bar").lastElementChild.style.width = `${r.p_incongruent * 100}%`;
    renderTokens($("tokens-o"), r.tokens_o, r.a_o);
    renderTokens($("tokens-s"), r.tokens_s, r.a_s);
    drawHeatmap(r.c, r.tokens_o, r.tokens_s);
  } catch (err) {
    showError(err);
  }
}

function renderTokens(el, tokens, weights) {
  el.textContent = "";
  const top = Math.max(...weights);
  tokens.forEach((t, i) => {
    const chip = document.createElement("span");
    chip.textContent = t;
    chip.title = `weight ${weights[i].toFixed(4)}`;
    chip.style.background = `rgba(29, 111, 209, ${0.06 + 0.7 * (weights[i] / top)})`;
    chip.style.color = weights[i] / top > 0.6 ? "#fff" : "inherit";
    el.append(chip);
  });
}

// Diverging blue/white/red scale centered on zero.
function heatColor(v, lo, hi) {
  const span = Math.max(Math.abs(lo), Math.abs(hi)) || 1;
  const t = Math.max(-1, Math.min(1, v / span));
  const mix = (a, b) => Math.round(a + (b - a) * Math.abs(t));
  return t >= 0
    ? `rgb(${mix(255, 194)}, ${mix(255, 69)}, ${mix(255, 45)})`
    : `rgb(${mix(255, 29)}, ${mix(255, 111)}, ${mix(255, 209)})`;
}

function drawHeatmap(c, rows, cols) {
  const canvas = $("heatmap");
  const ctx = canvas.getContext("2d");
  const labelW = 120;
  const labelH = 60;
  const cell = Math.max(
    14,
    Math.min(48, (canvas.width - labelW) / cols.length, 260 / rows.length),
  );
  canvas.height = labelH + rows.length * cell + 4;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  let lo = Infinity;
  let hi = -Infinity;
  for (const row of c) for (const v of row) { lo = Math.min(lo, v); hi = Math.max(hi, v); }

  ctx.font = "11px system-ui, sans-serif";
  cols.forEach((t, j) => {
    ctx.save();
    ctx.translate(labelW + j * cell + cell / 2, labelH - 6);
    ctx.rotate(-Math.PI / 4);
    ctx.textAlign = "left";
    ctx.fillStyle = "#667085";
    ctx.fillText(t.slice(0, 12), 0, 0);
    ctx.restore();
  });
  rows.forEach((t, i) => {
    ctx.textAlign = "right";
    ctx.fillStyle = "#667085";
    ctx.fillText(t.slice(0, 16), labelW - 8, labelH + i * cell + cell / 2 + 4);
  });
  for (let i = 0; i < rows.length; i++) {
    for (let j = 0; j < cols.length; j++) {
      ctx.fillStyle = heatColor(c[i][j], lo, hi);
      ctx.fillRect(labelW + j * cell, labelH + i * cell, cell - 1, cell - 1);
    }
  }
}

function drawLossChart() {
  const canvas = $("loss-chart");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "11px system-ui, sans-serif";
  ctx.fillStyle = "#667085";
  if (losses.length < 2) {
    ctx.fillText("training loss appears here", 10, 20);
    return;
  }
  const pad = { left: 46, right: 8, top: 8, bottom: 16 };
  const w = canvas.width - pad.left - pad.right;
  const h = canvas.height - pad.top - pad.bottom;
  const lo = Math.min(...losses);
  const hi = Math.max(...losses);
  const x = (i) => pad.left + (w * i) / (losses.length - 1);
  const y = (v) => pad.top + h * (1 - (v - lo) / (hi - lo || 1));

  ctx.fillText(hi.toFixed(3), 4, y(hi) + 4);
  ctx.fillText(lo.toFixed(3), 4, y(lo) + 4);
  ctx.fillText(`epoch ${losses.length}`, canvas.width - 64, canvas.height - 4);
  ctx.strokeStyle = "#1d6fd1";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  losses.forEach((v, i) => (i === 0 ? ctx.moveTo(x(0), y(v)) : ctx.lineTo(x(i), y(v))));
  ctx.stroke();
}

await init();
$("rebuild").addEventListener("click", rebuild);
$("train10").addEventListener("click", () => train(10));
$("train50").addEventListener("click", () => train(50));
$("analyze").addEventListener("click", analyze);
rebuild();

import init, { fitPdf, sparsifyDemo, recoverDemo } from "./pkg/polysparse_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const list = (id) => $(id).value.split(",").map((s) => Number(s.trim()));
const fmt = (x) => (Math.abs(x) < 1e-3 && x !== 0 ? x.toExponential(3) : x.toFixed(4));

function guard(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function bars(canvas, series, colors) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const k = series[0].length;
  const top = Math.max(...series.flat()) || 1;
  const slot = w / k;
  const bw = slot / (series.length + 1);
  series.forEach((s, j) => {
    ctx.fillStyle = colors[j];
    s.forEach((v, i) => {
      const bh = (v / top) * (h - 10);
      ctx.fillRect(i * slot + j * bw, h - bh, bw, bh);
    });
  });
}

function pattern(canvas, n, edges) {
  const ctx = canvas.getContext("2d");
  const s = canvas.width / n;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#236";
  const d = Math.max(s, 1);
  for (const [i, j] of edges) {
    ctx.fillRect(j * s, i * s, d, d);
    ctx.fillRect(i * s, j * s, d, d);
  }
}

function runFit() {
  guard($("fit-out"), () => {
    const r = JSON.parse(fitPdf($("fit-pdf").value, num("fit-n"), num("fit-eps")));
    bars($("fit-canvas"), [r.target, r.gamma], ["#bbb", "#2a6"]);
    $("fit-out").textContent =
      `T = ${r.p.length} components (grid ${r.grid}), delta_w = ${fmt(r.delta_w)}\n` +
      `grey: w(i/N)/S_N, green: induced gamma_i\n` +
      r.warnings.join("\n");
  });
}

function runSparsify() {
  $("sp-out").textContent = "running...";
  setTimeout(() => guard($("sp-out"), () => {
    const t0 = performance.now();
    const r = JSON.parse(sparsifyDemo(num("sp-n"), num("sp-p"), Number($("sp-deg").value),
      num("sp-eps"), num("sp-cs"), num("sp-seed")));
    const ms = performance.now() - t0;
    pattern($("sp-canvas"), r.n, r.edges);
    $("sp-out").textContent =
      `branch ${r.branch}, ${ms.toFixed(0)} ms\n` +
      `nnz: input ${r.input_nnz}, dense target ${r.dense_nnz}, output ${r.output_nnz}\n` +
      `pencil eigenvalues in [${fmt(r.lambda_min)}, ${fmt(r.lambda_max)}]: ${r.passed ? "within" : "outside"} 1 ± eps`;
  }), 0);
}

function runRecover() {
  guard($("rc-out"), () => {
    const p = list("rc-p");
    const r = JSON.parse(recoverDemo(p.length - 1, new Float64Array(p), new Float64Array(list("rc-a"))));
    $("rc-out").textContent =
      `gamma = [${r.gamma.map(fmt).join(", ")}]\n` +
      `alpha = [${r.alpha.map(fmt).join(", ")}]\n` +
      `max error ${fmt(r.error)}, residual ${fmt(r.residual)}, cond ${r.condition.toExponential(2)}`;
  });
}

await init();
$("fit-run").onclick = runFit;
$("sp-run").onclick = runSparsify;
$("rc-run").onclick = runRecover;
runFit();
runRecover();

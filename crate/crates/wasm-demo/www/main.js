import init, { inpaint_rgba, classify_rgba, cam_overlay_rgba, labels } from "./pkg/whatif_wasm.js";

const MAX_SIDE = 256;
const SCALE = 2;

const $ = (id) => document.getElementById(id);
const view = $("view"), maskCanvas = $("mask"), orig = $("orig");
const vctx = view.getContext("2d"), mctx = maskCanvas.getContext("2d"), octx = orig.getContext("2d");

let width = 0, height = 0;
let original = null;   // Uint8ClampedArray RGBA
let current = null;
let history = [];
let busy = false;

function status(msg) { $("status").textContent = msg; }

function setSize(w, h) {
  width = w; height = h;
  for (const c of [view, maskCanvas, orig]) {
    c.width = w; c.height = h;
    c.style.width = `${w * SCALE}px`; c.style.height = `${h * SCALE}px`;
  }
}

function put(ctx, rgba) {
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), width, height), 0, 0);
}

function renderTable(el, json) {
  const { topk } = JSON.parse(json);
  el.innerHTML = "<tr><th>class</th><th>p</th></tr>" +
    topk.map((r) => `<tr><td>${r.label}</td><td class="p">${r.probability.toFixed(4)}</td></tr>`).join("");
}

function redraw() {
  let shown = current;
  if ($("showcam").checked) {
    shown = cam_overlay_rgba(current, width, height, Number($("cls").value), $("alpha").value / 100);
  }
  put(vctx, shown);
  renderTable($("edited"), classify_rgba(current, width, height));
}

function load(imageEl) {
  const s = Math.min(1, MAX_SIDE / Math.max(imageEl.width, imageEl.height));
  setSize(Math.max(1, Math.round(imageEl.width * s)), Math.max(1, Math.round(imageEl.height * s)));
  octx.drawImage(imageEl, 0, 0, width, height);
  original = octx.getImageData(0, 0, width, height).data;
  current = original.slice();
  history = [];
  mctx.clearRect(0, 0, width, height);
  renderTable($("original"), classify_rgba(original, width, height));
  redraw();
  status(`${width}x${height}`);
}

function sample() {
  const c = document.createElement("canvas");
  c.width = 160; c.height = 120;
  const g = c.getContext("2d");
  const sky = g.createLinearGradient(0, 0, 0, 120);
  sky.addColorStop(0, "#7fb2e5"); sky.addColorStop(1, "#dfeaf5");
  g.fillStyle = sky; g.fillRect(0, 0, 160, 120);
  g.fillStyle = "#2f5d7c"; g.fillRect(0, 80, 160, 40);
  g.fillStyle = "#eee"; g.fillRect(40, 62, 80, 18);
  g.fillStyle = "#555"; g.fillRect(78, 20, 3, 42);
  load(c);
}

function maskBytes() {
  return mctx.getImageData(0, 0, width, height).data;
}

function paint(ev) {
  const r = maskCanvas.getBoundingClientRect();
  const x = (ev.clientX - r.left) / SCALE, y = (ev.clientY - r.top) / SCALE;
  const radius = Number($("brush").value) / 2;
  mctx.globalCompositeOperation = $("erase").checked ? "destination-out" : "source-over";
  mctx.fillStyle = "rgba(255,0,0,1)";
  mctx.beginPath(); mctx.arc(x, y, radius, 0, 2 * Math.PI); mctx.fill();
}

function setBusy(b) {
  busy = b;
  for (const id of ["run", "undo", "reset", "file", "sample"]) $(id).disabled = b;
}

function fill() {
  if (busy || !current) return;
  setBusy(true);
  status("filling...");
  // let the status paint before the synchronous wasm call
  setTimeout(() => {
    try {
      const algo = document.querySelector("input[name=algo]:checked").value;
      const t0 = performance.now();
      const out = inpaint_rgba(current, maskBytes(), width, height, algo, Number($("seed").value) >>> 0);
      history.push(current);
      current = new Uint8ClampedArray(out);
      mctx.clearRect(0, 0, width, height);
      redraw();
      status(`${algo}: ${(performance.now() - t0).toFixed(0)} ms`);
    } catch (e) {
      status(String(e));
    } finally {
      setBusy(false);
    }
  }, 0);
}

await init();
$("cls").innerHTML = labels().map((l, i) => `<option value="${i}">${l}</option>`).join("");

let drawing = false;
maskCanvas.addEventListener("pointerdown", (e) => { drawing = true; paint(e); });
maskCanvas.addEventListener("pointermove", (e) => { if (drawing) paint(e); });
window.addEventListener("pointerup", () => { drawing = false; });
$("clear").onclick = () => mctx.clearRect(0, 0, width, height);
$("run").onclick = fill;
$("undo").onclick = () => { if (history.length) { current = history.pop(); redraw(); } };
$("reset").onclick = () => { if (original) { current = original.slice(); history = []; redraw(); } };
$("showcam").onchange = redraw;
$("cls").onchange = redraw;
$("alpha").oninput = () => { if ($("showcam").checked) redraw(); };
$("sample").onclick = sample;
$("file").onchange = (e) => {
  const f = e.target.files[0];
  if (!f) return;
  const img = new Image();
  img.onload = () => load(img);
  img.src = URL.createObjectURL(f);
};
sample();

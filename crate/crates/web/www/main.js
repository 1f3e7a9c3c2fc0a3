import init, { synthesize, analyze, band_preview } from "./pkg/inpaint_forensics_web.js";

const $ = (id) => document.getElementById(id);
const MAX_SIDE = 512;

let current = null; // { rgba, width, height, truth }

function status(text) {
  $("status").textContent = text;
}

function drawGray(canvas, bytes, width, height, tint) {
  canvas.width = width;
  canvas.height = height;
  const img = new ImageData(width, height);
  for (let i = 0; i < width * height; i++) {
    const v = bytes[i];
    img.data[4 * i] = v;
    img.data[4 * i + 1] = tint ? v * 0.35 : v;
    img.data[4 * i + 2] = tint ? 0 : v;
    img.data[4 * i + 3] = 255;
  }
  canvas.getContext("2d").putImageData(img, 0, 0);
}

function clear(canvas) {
  canvas.getContext("2d").clearRect(0, 0, canvas.width, canvas.height);
}

function setImage(rgba, width, height, truth) {
  current = { rgba, width, height, truth };
  const canvas = $("input");
  canvas.width = width;
  canvas.height = height;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), width, height), 0, 0);
  if (truth) drawGray($("truth"), truth, width, height); else clear($("truth"));
  clear($("heat"));
  clear($("mask"));
  clear($("bandview"));
  $("detect").disabled = false;
  $("preview").disabled = false;
}

function generate() {
  const sample = synthesize(256, $("mode").value, Number($("sigma").value), Number($("seed").value) >>> 0);
  const gray = sample.image;
  const rgba = new Uint8Array(gray.length * 4);
  for (let i = 0; i < gray.length; i++) {
    rgba.set([gray[i], gray[i], gray[i], 255], 4 * i);
  }
  setImage(rgba, sample.size, sample.size, sample.truth);
  status(`generated ${sample.size}×${sample.size} ${$("mode").value} forgery`);
}

async function loadFile(file) {
  const bitmap = await createImageBitmap(file);
  const scale = Math.min(1, MAX_SIDE / Math.max(bitmap.width, bitmap.height));
  const width = Math.max(16, Math.round(bitmap.width * scale));
  const height = Math.max(16, Math.round(bitmap.height * scale));
  const canvas = new OffscreenCanvas(width, height);
  const ctx = canvas.getContext("2d");
  ctx.drawImage(bitmap, 0, 0, width, height);
  setImage(ctx.getImageData(0, 0, width, height).data, width, height, null);
  status(`loaded ${file.name} (${width}×${height}${scale < 1 ? ", downscaled" : ""})`);
}

function detect() {
  const { rgba, width, height, truth } = current;
  status("running detector…");
  // Let the status repaint before the synchronous run.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const out = analyze(rgba, width, height, Number($("threshold").value), truth ?? new Uint8Array());
      drawGray($("heat"), out.heat, width, height, true);
      drawGray($("mask"), out.mask, width, height);
      const summary = JSON.parse(out.summary);
      status(`${((performance.now() - t0) / 1000).toFixed(1)} s\n${JSON.stringify(summary, null, 2)}`);
    } catch (e) {
      status(`error: ${e}`);
    }
  }, 20);
}

function preview() {
  const { rgba, width, height } = current;
  const index = Number($("band").value);
  try {
    const bytes = band_preview(rgba, width, height, index);
    drawGray($("bandview"), bytes, Math.ceil(width / 2), Math.ceil(height / 2));
  } catch (e) {
    status(`error: ${e}`);
  }
}

async function main() {
  await init();
  for (let i = 0; i < 12; i++) {
    const opt = document.createElement("option");
    opt.value = i;
    opt.textContent = `orientation ${Math.floor(i / 2)} ${i % 2 ? "imag" : "real"}`;
    $("band").append(opt);
  }
  $("generate").onclick = generate;
  $("file").onchange = (e) => e.target.files[0] && loadFile(e.target.files[0]);
  $("detect").onclick = detect;
  $("preview").onclick = preview;
  generate();
}

main().catch((e) => status(`failed to start: ${e}`));

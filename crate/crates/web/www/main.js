import init, { Demo, chart_names } from "./pkg/feelgrid_web.js";

const $ = (id) => document.getElementById(id);
let demo;
let highlight = [];

function log(line) {
  $("log").textContent = line + "\n" + $("log").textContent;
}

function draw(frame) {
  if (frame.error) {
    $("status").textContent = frame.error;
    return;
  }
  $("status").textContent = `frame ${frame.frame_id}, ${frame.magnification}x` + (frame.layer ? `, by ${frame.layer}` : "");
  $("braille").textContent = frame.braille || "";
  const grid = $("grid");
  const rows = frame.grid.trim().split("\n");
  const selected = new Set(
    frame.elements.filter((e) => frame.selected.includes(e.id)).map((e) => `${e.col},${e.row}`)
  );
  const lit = new Set(highlight.map((c) => `${c.col},${c.row}`));
  grid.replaceChildren();
  rows.forEach((row, r) => {
    [...row].forEach((ch, c) => {
      const pin = document.createElement("div");
      if (ch === "#") pin.className = "up";
      if (selected.has(`${c},${r}`)) pin.className = "sel";
      if (lit.has(`${c},${r}`)) pin.classList.add("hl");
      pin.dataset.col = c;
      pin.dataset.row = r;
      grid.appendChild(pin);
    });
  });
}

function load(name) {
  demo = new Demo(name);
  highlight = [];
  draw(JSON.parse(demo.frame()));
}

async function main() {
  await init();
  for (const name of JSON.parse(chart_names())) {
    $("chart").add(new Option(name.replace("_", " "), name));
  }
  $("chart").onchange = (e) => load(e.target.value);
  load($("chart").value);

  document.querySelectorAll("[data-op]").forEach((b) => {
    b.onclick = () => {
      highlight = [];
      draw(JSON.parse(demo.view(b.dataset.op)));
    };
  });

  $("sigma").oninput = (e) => ($("sigmaval").textContent = Number(e.target.value).toFixed(1));

  $("grid").onclick = (e) => {
    const pin = e.target.closest("[data-col]");
    if (!pin) return;
    // Centre of the clicked pin, in pin units.
    const x = Number(pin.dataset.col) + 0.5;
    const y = Number(pin.dataset.row) + 0.5;
    const r = JSON.parse(demo.tap(x, y, Number($("sigma").value), $("right").checked));
    highlight = r.highlight;
    const best = r.candidates[0];
    log(`tap (${x}, ${y}): ${r.speech}` + (best ? `  [p=${best.probability.toFixed(3)}]` : ""));
    draw(JSON.parse(demo.frame()));
  };

  $("clear").onclick = () => {
    demo.clear_touches();
    highlight = [];
    draw(JSON.parse(demo.frame()));
  };

  $("ask").onsubmit = (e) => {
    e.preventDefault();
    const r = JSON.parse(demo.ask($("q").value));
    log(`> ${r.augmented}\n${r.text}  (${r.word_count} words, ${r.intent})`);
  };
}

main();

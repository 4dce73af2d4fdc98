import { SessionClient } from "./api.js";
import { Playground } from "./app.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

window.addEventListener("DOMContentLoaded", () => {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8787";
  const libs = (params.get("libs") ?? "core,market").split(",").filter(Boolean);

  const playground = new Playground(new SessionClient(base), {
    transcript: el("transcript"),
    tree: el("entity-tree"),
    rules: el("rules"),
    palette: el("palette"),
    timeline: el("timeline"),
    banner: el("banner"),
    status: el("status"),
    input: el<HTMLInputElement>("utterance"),
    whatifCommands: el<HTMLInputElement>("whatif-commands"),
    whatifQuery: el<HTMLInputElement>("whatif-query"),
  });

  const input = el<HTMLInputElement>("utterance");
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter" && input.value.trim()) {
      const text = input.value.trim();
      input.value = "";
      void playground.submit(text);
    }
  });

  el("whatif-run").addEventListener("click", () => {
    void playground.whatif(
      el<HTMLInputElement>("whatif-commands").value,
      el<HTMLInputElement>("whatif-query").value,
    );
  });

  el("export").addEventListener("click", async () => {
    const text = await playground.exportTranscript();
    const blob = new Blob([text], { type: "text/plain" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "transcript.eco";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  void playground.start(libs).catch((err) => {
    el("status").textContent = `service unreachable: ${err}`;
  });
});

// Pure render helpers: service JSON in, HTML strings out. No state math
// happens here; breaking the service must break every panel.

import type {
  AffordanceItem,
  AnswerJson,
  EntityJson,
  QuantityJson,
  RuleDump,
  StateDoc,
  StepRecord,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderQuantity(q: QuantityJson | boolean): string {
  if (typeof q === "boolean") return q ? "true" : "false";
  if (q.g !== undefined) return `${q.g} g`;
  if (q.count !== undefined) return `${q.count}`;
  return `${q.value ?? "?"}`;
}

const ROLE_CLASS: Record<string, string> = {
  Eco: "badge-eco",
  Fact: "badge-fact",
  Do: "badge-do",
  Query: "badge-query",
  Goal: "badge-goal",
};

export function renderTranscriptEntry(record: StepRecord): string {
  const badge = `<span class="badge ${ROLE_CLASS[record.role] ?? ""}">${record.role}</span>`;
  const bits: string[] = [];
  for (const act of record.actions) {
    bits.push(`<span class="applied">${escapeHtml(act)}</span>`);
  }
  for (const ev of record.events) {
    bits.push(`<span class="event">event: ${escapeHtml(ev.name)} (entity ${ev.subject})</span>`);
  }
  if (record.answer !== null) {
    bits.push(`<span class="answer">${escapeHtml(record.answer)}</span>`);
  }
  if (record.failure !== null) {
    bits.push(`<span class="failure">${escapeHtml(record.failure)}</span>`);
  }
  const result = bits.length ? `<div class="result">${bits.join(" ")}</div>` : "";
  return `<div class="entry" data-step="${record.step}">` +
    `${badge} <span class="utterance">${escapeHtml(record.text)}</span>` +
    `<span class="meta">v${record.emulator_version} · ${record.state_hash.slice(0, 8)}</span>` +
    `${result}</div>`;
}

export function renderParseError(text: string, span: [number, number] | null,
                                 message: string): string {
  const safe = escapeHtml(text);
  if (span === null) {
    return `<div class="parse-error">${escapeHtml(message)}</div>`;
  }
  const start = Math.min(span[0], text.length);
  const width = Math.max(1, Math.min(span[1], text.length) - start);
  const caret = " ".repeat(start) + "^".repeat(width);
  return `<div class="parse-error"><pre>${safe}\n${caret}</pre>` +
    `<div>${escapeHtml(message)}</div></div>`;
}

type TreeIndex = {
  children: Map<number, number[]>;
  worn: Map<number, { garment: number; slot?: string; layer?: number }[]>;
  placed: Set<number>;
};

function indexRelations(state: StateDoc): TreeIndex {
  const children = new Map<number, number[]>();
  const worn = new Map<number, { garment: number; slot?: string; layer?: number }[]>();
  const placed = new Set<number>();
  for (const rel of state.relations) {
    if (rel.kind === "In") {
      const kids = children.get(rel.object) ?? [];
      kids.push(rel.subject);
      children.set(rel.object, kids.sort((a, b) => a - b));
      placed.add(rel.subject);
    } else if (rel.kind === "Worn-By") {
      const items = worn.get(rel.object) ?? [];
      items.push({ garment: rel.subject, slot: rel.slot, layer: rel.layer });
      worn.set(rel.object, items.sort((a, b) => a.garment - b.garment));
      placed.add(rel.subject);
    }
  }
  return { children, worn, placed };
}

function entityLine(ent: EntityJson): string {
  const props = Object.entries(ent.props)
    .map(([k, v]) => `${escapeHtml(k)}: ${renderQuantity(v)}`)
    .join(", ");
  const label = ent.label && ent.label !== ent.kind ? ` “${escapeHtml(ent.label)}”` : "";
  return `<span class="entity">${escapeHtml(ent.kind)} ${ent.id}</span>${label}` +
    (props ? ` <span class="props">[${props}]</span>` : "");
}

export function renderEntityTree(state: StateDoc): string {
  const byId = new Map(state.entities.map((e) => [e.id, e]));
  const { children, worn, placed } = indexRelations(state);

  function renderNode(id: number): string {
    const ent = byId.get(id);
    if (!ent) return "";
    const kids = (children.get(id) ?? []).map(renderNode).join("");
    const garments = (worn.get(id) ?? [])
      .map((w) => {
        const g = byId.get(w.garment);
        const where = w.slot !== undefined ? ` (${escapeHtml(w.slot)}/${w.layer})` : "";
        return `<li class="worn">wearing ${g ? entityLine(g) : `#${w.garment}`}${where}</li>`;
      })
      .join("");
    const inner = kids || garments ? `<ul>${garments}${kids}</ul>` : "";
    return `<li>${entityLine(ent)}${inner}</li>`;
  }

  const roots = state.entities.filter((e) => !placed.has(e.id));
  if (roots.length === 0 && state.entities.length === 0) {
    return `<p class="empty">nothing here yet</p>`;
  }
  return `<ul class="tree">${roots.map((e) => renderNode(e.id)).join("")}</ul>`;
}

export function renderRules(rules: RuleDump[]): string {
  const groups: Record<string, RuleDump[]> = { Compiled: [], Situation: [] };
  for (const rule of rules) {
    (groups[rule.provenance] ?? (groups[rule.provenance] = [])).push(rule);
  }
  const section = (name: string, items: RuleDump[]) => {
    const lines = items
      .map(
        (r) =>
          `<li data-rule="${r.id}"><code>#${r.id}</code> ` +
          `<span class="source">${escapeHtml(r.source)}</span> ` +
          `<code class="pattern">${escapeHtml(r.pattern)}</code></li>`,
      )
      .join("");
    return `<section><h3>${name} (${items.length})</h3><ul>${lines || "<li class=\"empty\">none</li>"}</ul></section>`;
  };
  return section("Compiled", groups.Compiled) + section("Situation", groups.Situation);
}

export function renderPalette(actions: AffordanceItem[], fetchedAtStep: number): string {
  if (actions.length === 0) {
    return `<p class="empty">no actions available</p>`;
  }
  return actions
    .map(
      (a) =>
        `<button class="affordance" data-label="${escapeHtml(a.label)}" ` +
        `data-step="${fetchedAtStep}">${escapeHtml(a.label)}</button>`,
    )
    .join("");
}

export function renderAnswerBanner(answer: AnswerJson, applied: boolean): string {
  const badge = applied ? "" : ` <span class="badge badge-fork">not applied</span>`;
  return `<div class="banner banner-${answer.kind}">` +
    `${escapeHtml(answer.text)}${badge}</div>`;
}

export function renderTimeline(records: StepRecord[]): string {
  if (records.length === 0) return `<p class="empty">no steps yet</p>`;
  const w = 260;
  const h = 60;
  const maxStep = Math.max(1, records.length - 1);
  const versions = records.map((r) => r.emulator_version);
  const vmin = Math.min(...versions);
  const vmax = Math.max(...versions, vmin + 1);
  const points = records
    .map((r, i) => {
      const x = (i / maxStep) * (w - 10) + 5;
      const y = h - 5 - ((r.emulator_version - vmin) / (vmax - vmin)) * (h - 10);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return `<svg viewBox="0 0 ${w} ${h}" class="timeline">` +
    `<polyline points="${points}" fill="none" stroke="currentColor"/>` +
    `</svg><span class="timeline-label">emulator v${vmin}→v${vmax} over ${records.length} steps</span>`;
}

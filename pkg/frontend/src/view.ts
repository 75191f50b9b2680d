/** DOM rendering. Everything is rebuilt from the flow state on each render;
 * the state machine owns all logic, this file only draws it. */

import type { ReviewFlow } from "./state.js";
import type { AgreementReport, ProgressReport } from "./types.js";
import { CRITERIA, CRITERION_LABELS, type CriterionKey } from "./types.js";

export interface Handlers {
  onBegin: (annotator: string) => void;
  onSet: (key: CriterionKey, value: boolean) => void;
  onSubmit: () => void;
  onSelectStep: (index: number | null) => void;
  onRetry: () => void;
  onShowAgreement: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function loginScreen(handlers: Handlers): HTMLElement {
  const panel = el("div", "panel login");
  panel.appendChild(el("h1", undefined, "Dataset review"));
  panel.appendChild(
    el("p", "hint", "Enter your annotator token to start. Keys: 1/2/3 toggle criteria, Enter submits."),
  );
  const input = el("input");
  input.placeholder = "annotator token";
  input.id = "annotator-input";
  const button = el("button", "primary", "Start reviewing");
  const begin = () => handlers.onBegin(input.value);
  button.addEventListener("click", begin);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") begin();
  });
  panel.append(input, button);
  return panel;
}

function errorCard(title: string, details: string[], onRetry?: () => void): HTMLElement {
  const card = el("div", "error-card");
  card.appendChild(el("strong", undefined, title));
  for (const detail of details) card.appendChild(el("div", "detail", detail));
  if (onRetry) {
    const retry = el("button", "primary", "Retry");
    retry.addEventListener("click", onRetry);
    card.appendChild(retry);
  }
  return card;
}

function imagePanel(flow: ReviewFlow): HTMLElement {
  const item = flow.item!;
  const highlighted = flow.highlightedImages();
  const dimOthers = highlighted.size > 0;
  const panel = el("div", "images");
  item.image_urls.forEach((url, index) => {
    const frame = el("figure", "image-frame");
    if (highlighted.has(index)) frame.classList.add("focused");
    else if (dimOthers) frame.classList.add("dimmed");
    const img = el("img");
    img.src = url;
    img.alt = `image ${index}`;
    img.loading = "lazy";
    frame.appendChild(img);
    frame.appendChild(el("figcaption", undefined, `image ${index}`));
    panel.appendChild(frame);
  });
  return panel;
}

function stepList(flow: ReviewFlow, handlers: Handlers): HTMLElement {
  const item = flow.item!;
  const list = el("ol", "steps");
  item.record.steps.forEach((step, index) => {
    const entry = el("li", "step");
    if (flow.selectedStep === index) entry.classList.add("selected");
    entry.appendChild(el("div", "sub-question", step.sub_question));
    entry.appendChild(el("div", "focus-note", `focus: images ${step.focus.join(", ")}`));
    entry.appendChild(el("div", "answer", step.answer));
    entry.addEventListener("mouseenter", () => handlers.onSelectStep(index));
    entry.addEventListener("mouseleave", () => handlers.onSelectStep(null));
    entry.addEventListener("click", () =>
      handlers.onSelectStep(flow.selectedStep === index ? null : index),
    );
    list.appendChild(entry);
  });
  return list;
}

function togglesPanel(flow: ReviewFlow, handlers: Handlers): HTMLElement {
  const panel = el("div", "criteria");
  CRITERIA.forEach((key, index) => {
    const row = el("div", "criterion");
    row.appendChild(el("span", "label", `${index + 1}. ${CRITERION_LABELS[key]}`));
    const state = flow.criterion(key);
    const yes = el("button", state === true ? "toggle on" : "toggle", "correct");
    const no = el("button", state === false ? "toggle on bad" : "toggle", "incorrect");
    yes.addEventListener("click", () => handlers.onSet(key, true));
    no.addEventListener("click", () => handlers.onSet(key, false));
    row.append(yes, no);
    panel.appendChild(row);
  });
  const submit = el("button", "primary submit", "Submit judgment (Enter)");
  submit.disabled = !flow.canSubmit();
  submit.addEventListener("click", handlers.onSubmit);
  panel.appendChild(submit);
  return panel;
}

function submittedLog(flow: ReviewFlow): HTMLElement {
  const wrap = el("details", "submitted-log");
  wrap.appendChild(el("summary", undefined, `Submitted this session (${flow.submitted.length})`));
  for (const echo of flow.submitted) {
    const line = el("div", "echo");
    const flags = [echo.final_answer_ok, echo.sub_answers_ok, echo.focus_ok]
      .map((v) => (v ? "correct" : "incorrect"))
      .join(" / ");
    line.textContent = `${echo.record_id.slice(0, 12)}… — ${flags}`;
    wrap.appendChild(line);
  }
  return wrap;
}

function reviewScreen(flow: ReviewFlow, handlers: Handlers): HTMLElement {
  const item = flow.item!;
  const screen = el("div", "review");
  const header = el("div", "header");
  header.appendChild(el("span", undefined, `Item ${item.index + 1} of ${item.total}`));
  header.appendChild(el("span", "who", flow.annotator));
  screen.appendChild(header);

  if (flow.issues.length > 0) {
    screen.appendChild(
      errorCard(
        "This item has data problems",
        flow.issues.map((i) => `${i.where}: ${i.detail}`),
      ),
    );
  }

  screen.appendChild(imagePanel(flow));
  const question = el("div", "question");
  question.appendChild(el("h2", undefined, item.record.question));
  if (item.record.question_type === "single_choice" && item.record.choices) {
    const choices = el("ul", "choices");
    item.record.choices.forEach((choice, i) => {
      choices.appendChild(el("li", undefined, `${String.fromCharCode(65 + i)}. ${choice}`));
    });
    question.appendChild(choices);
  }
  screen.appendChild(question);
  screen.appendChild(stepList(flow, handlers));
  screen.appendChild(el("div", "final-answer", `Final answer: ${item.record.final_answer}`));
  screen.appendChild(togglesPanel(flow, handlers));
  screen.appendChild(submittedLog(flow));
  return screen;
}

function doneScreen(flow: ReviewFlow, handlers: Handlers): HTMLElement {
  const screen = el("div", "panel done");
  screen.appendChild(el("h1", undefined, "All done"));
  screen.appendChild(el("p", undefined, `${flow.judgedCount} of ${flow.total} items judged.`));
  const agreementButton = el("button", "primary", "Show agreement report");
  agreementButton.addEventListener("click", handlers.onShowAgreement);
  screen.appendChild(agreementButton);
  screen.appendChild(el("div", "agreement-slot"));
  screen.appendChild(submittedLog(flow));
  return screen;
}

/** Agreement numbers are shown exactly as the service reports them. */
export function renderAgreement(report: AgreementReport, progress: ProgressReport | null): HTMLElement {
  const card = el("div", "agreement");
  card.appendChild(el("h3", undefined, "Agreement report (from service)"));
  const rows: [string, string][] = [
    ["Items with all ratings", String(report.n_items)],
    ["Raters", String(report.n_raters)],
    ["Validity rate", report.validity_rate === null ? "n/a" : String(report.validity_rate)],
    ["Fleiss' kappa", report.kappa === null ? "n/a" : String(report.kappa)],
    ["Incomplete items", String(report.incomplete)],
  ];
  const table = el("table");
  for (const [label, value] of rows) {
    const tr = el("tr");
    tr.appendChild(el("td", "label", label));
    tr.appendChild(el("td", "value", value));
    table.appendChild(tr);
  }
  card.appendChild(table);
  if (progress) {
    const per = el("div", "progress");
    for (const [who, count] of Object.entries(progress.annotators)) {
      per.appendChild(el("div", undefined, `${who}: ${count} / ${progress.total}`));
    }
    card.appendChild(per);
  }
  return card;
}

export function render(root: HTMLElement, flow: ReviewFlow, handlers: Handlers): void {
  root.replaceChildren();
  switch (flow.phase) {
    case "login":
      root.appendChild(loginScreen(handlers));
      break;
    case "loading":
      root.appendChild(el("div", "panel", "Loading…"));
      break;
    case "reviewing":
      root.appendChild(reviewScreen(flow, handlers));
      break;
    case "done":
      root.appendChild(doneScreen(flow, handlers));
      break;
    case "error":
      root.appendChild(
        errorCard("Request failed", [flow.errorMessage], handlers.onRetry),
      );
      break;
  }
}

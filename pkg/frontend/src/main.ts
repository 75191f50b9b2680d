import { ApiError, ReviewApi } from "./api.js";
import { ReviewFlow } from "./state.js";
import { render, renderAgreement, type Handlers } from "./view.js";
import type { CriterionKey } from "./types.js";

const api = new ReviewApi("");
const flow = new ReviewFlow();
const root = document.getElementById("app") as HTMLElement;

function draw(): void {
  render(root, flow, handlers);
}

async function advance(): Promise<void> {
  flow.phase = "loading";
  draw();
  try {
    flow.itemLoaded(await api.nextItem(flow.annotator));
  } catch (error) {
    flow.loadFailed(error instanceof Error ? error.message : String(error));
  }
  draw();
}

async function submit(): Promise<void> {
  if (!flow.canSubmit() || flow.item === null) return;
  const recordId = flow.item.record.id;
  const body = flow.judgmentBody();
  try {
    const echo = await api.submitJudgment(recordId, body);
    flow.submissionAccepted(echo);
    await advance();
  } catch (error) {
    // Keep the toggles so the annotator can retry without re-entering them.
    const message = error instanceof ApiError ? error.message : String(error);
    flow.errorMessage = `submission failed: ${message}`;
    flow.phase = "error";
    draw();
  }
}

async function showAgreement(): Promise<void> {
  const slot = root.querySelector(".agreement-slot");
  if (!slot) return;
  try {
    const [report, progress] = await Promise.all([api.agreement(), api.progress()]);
    slot.replaceChildren(renderAgreement(report, progress));
  } catch (error) {
    slot.textContent = `could not load agreement: ${error instanceof Error ? error.message : error}`;
  }
}

const handlers: Handlers = {
  onBegin: (annotator) => {
    if (flow.beginSession(annotator)) void advance();
    else draw();
  },
  onSet: (key: CriterionKey, value: boolean) => {
    flow.setCriterion(key, value);
    draw();
  },
  onSubmit: () => void submit(),
  onSelectStep: (index) => {
    flow.selectStep(index);
    draw();
  },
  onRetry: () => void advance(),
  onShowAgreement: () => void showAgreement(),
};

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  const action = flow.handleKey(event.key);
  if (action === "toggled") {
    event.preventDefault();
    draw();
  } else if (action === "submit") {
    event.preventDefault();
    void submit();
  }
});

draw();

/** Pure review-flow state machine. All transitions are synchronous and
 * DOM-free so the whole protocol is unit-testable; main.ts wires it to the
 * API client and the renderer.
 *
 * The UI never computes validity or agreement itself — every displayed
 * statistic arrives verbatim from the service. */

import {
  CRITERIA,
  type CriterionKey,
  type JudgmentBody,
  type JudgmentEcho,
  type NextItemResponse,
  type ReviewItem,
  isDone,
} from "./types.js";

export type Phase = "login" | "loading" | "reviewing" | "done" | "error";

export type ToggleState = boolean | undefined;

export interface DataIssue {
  where: string;
  detail: string;
}

/** Sanity-check an item before rendering; issues become an inline error card
 * while everything still renderable is rendered. */
export function validateItem(item: ReviewItem): DataIssue[] {
  const issues: DataIssue[] = [];
  const imageCount = item.record.images.length;
  if (imageCount === 0) {
    issues.push({ where: "record", detail: "record has no images" });
  }
  if (item.image_urls.length !== imageCount) {
    issues.push({
      where: "images",
      detail: `image_urls has ${item.image_urls.length} entries for ${imageCount} images`,
    });
  }
  if (item.record.steps.length === 0) {
    issues.push({ where: "steps", detail: "record has no reasoning steps" });
  }
  item.record.steps.forEach((step, i) => {
    for (const focus of step.focus) {
      if (!Number.isInteger(focus) || focus < 0 || focus >= imageCount) {
        issues.push({
          where: `step ${i + 1}`,
          detail: `focus index ${focus} outside 0..${imageCount - 1}`,
        });
      }
    }
  });
  if (item.record.question_type === "single_choice" && !item.record.choices?.length) {
    issues.push({ where: "record", detail: "single_choice record without choices" });
  }
  return issues;
}

export class ReviewFlow {
  phase: Phase = "login";
  annotator = "";
  item: ReviewItem | null = null;
  issues: DataIssue[] = [];
  toggles = new Map<CriterionKey, ToggleState>();
  selectedStep: number | null = null;
  judgedCount = 0;
  total = 0;
  errorMessage = "";
  /** Server echoes of everything submitted this session, newest first. */
  submitted: JudgmentEcho[] = [];

  beginSession(annotator: string): boolean {
    const token = annotator.trim();
    if (!token) return false;
    this.annotator = token;
    this.phase = "loading";
    return true;
  }

  itemLoaded(payload: NextItemResponse): void {
    if (isDone(payload)) {
      this.phase = "done";
      this.item = null;
      this.judgedCount = payload.judged;
      this.total = payload.total;
      return;
    }
    this.item = payload;
    this.issues = validateItem(payload);
    this.judgedCount = payload.judged;
    this.total = payload.total;
    this.toggles = new Map();
    this.selectedStep = null;
    this.phase = "reviewing";
  }

  loadFailed(message: string): void {
    this.phase = "error";
    this.errorMessage = message;
  }

  setCriterion(key: CriterionKey, value: boolean): void {
    this.toggles.set(key, value);
  }

  /** Keyboard toggle: unset -> correct, then flip on each press. */
  cycleCriterion(key: CriterionKey): void {
    const current = this.toggles.get(key);
    this.toggles.set(key, current === undefined ? true : !current);
  }

  criterion(key: CriterionKey): ToggleState {
    return this.toggles.get(key);
  }

  canSubmit(): boolean {
    return (
      this.phase === "reviewing" &&
      CRITERIA.every((key) => this.toggles.get(key) !== undefined)
    );
  }

  judgmentBody(): JudgmentBody {
    if (!this.canSubmit()) {
      throw new Error("all three criteria must be set before submitting");
    }
    return {
      annotator: this.annotator,
      final_answer_ok: this.toggles.get("final_answer_ok") as boolean,
      sub_answers_ok: this.toggles.get("sub_answers_ok") as boolean,
      focus_ok: this.toggles.get("focus_ok") as boolean,
    };
  }

  submissionAccepted(echo: JudgmentEcho): void {
    this.submitted.unshift(echo);
    this.phase = "loading";
  }

  selectStep(index: number | null): void {
    if (index !== null && (this.item === null || index < 0 || index >= this.item.record.steps.length)) {
      return;
    }
    this.selectedStep = index;
  }

  /** Image indices to highlight for the selected step (empty set = no
   * highlighting, all images shown normally). */
  highlightedImages(): Set<number> {
    if (this.item === null || this.selectedStep === null) return new Set();
    const step = this.item.record.steps[this.selectedStep];
    if (!step) return new Set();
    const count = this.item.record.images.length;
    return new Set(step.focus.filter((i) => Number.isInteger(i) && i >= 0 && i < count));
  }

  /** Map a keydown to an action; returns true when the key was consumed. */
  handleKey(key: string): "toggled" | "submit" | null {
    if (this.phase !== "reviewing") return null;
    if (key === "1" || key === "2" || key === "3") {
      const criterion = CRITERIA[Number(key) - 1];
      if (criterion) this.cycleCriterion(criterion);
      return "toggled";
    }
    if (key === "Enter" && this.canSubmit()) {
      return "submit";
    }
    return null;
  }
}

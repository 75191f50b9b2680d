/** Pure review-flow state machine. All transitions are synchronous and
 * DOM-free so the whole protocol is unit-testable; main.ts wires it to the
 * API client and the renderer.
 *
 * The UI never computes validity or agreement itself — every displayed
 * statistic arrives verbatim from the service. */
import { CRITERIA, isDone, } from "./types.js";
/** Sanity-check an item before rendering; issues become an inline error card
 * while everything still renderable is rendered. */
export function validateItem(item) {
    const issues = [];
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
    constructor() {
        this.phase = "login";
        this.annotator = "";
        this.item = null;
        this.issues = [];
        this.toggles = new Map();
        this.selectedStep = null;
        this.judgedCount = 0;
        this.total = 0;
        this.errorMessage = "";
        /** Server echoes of everything submitted this session, newest first. */
        this.submitted = [];
    }
    beginSession(annotator) {
        const token = annotator.trim();
        if (!token)
            return false;
        this.annotator = token;
        this.phase = "loading";
        return true;
    }
    itemLoaded(payload) {
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
    loadFailed(message) {
        this.phase = "error";
        this.errorMessage = message;
    }
    setCriterion(key, value) {
        this.toggles.set(key, value);
    }
    /** Keyboard toggle: unset -> correct, then flip on each press. */
    cycleCriterion(key) {
        const current = this.toggles.get(key);
        this.toggles.set(key, current === undefined ? true : !current);
    }
    criterion(key) {
        return this.toggles.get(key);
    }
    canSubmit() {
        return (this.phase === "reviewing" &&
            CRITERIA.every((key) => this.toggles.get(key) !== undefined));
    }
    judgmentBody() {
        if (!this.canSubmit()) {
            throw new Error("all three criteria must be set before submitting");
        }
        return {
            annotator: this.annotator,
            final_answer_ok: this.toggles.get("final_answer_ok"),
            sub_answers_ok: this.toggles.get("sub_answers_ok"),
            focus_ok: this.toggles.get("focus_ok"),
        };
    }
    submissionAccepted(echo) {
        this.submitted.unshift(echo);
        this.phase = "loading";
    }
    selectStep(index) {
        if (index !== null && (this.item === null || index < 0 || index >= this.item.record.steps.length)) {
            return;
        }
        this.selectedStep = index;
    }
    /** Image indices to highlight for the selected step (empty set = no
     * highlighting, all images shown normally). */
    highlightedImages() {
        if (this.item === null || this.selectedStep === null)
            return new Set();
        const step = this.item.record.steps[this.selectedStep];
        if (!step)
            return new Set();
        const count = this.item.record.images.length;
        return new Set(step.focus.filter((i) => Number.isInteger(i) && i >= 0 && i < count));
    }
    /** Map a keydown to an action; returns true when the key was consumed. */
    handleKey(key) {
        if (this.phase !== "reviewing")
            return null;
        if (key === "1" || key === "2" || key === "3") {
            const criterion = CRITERIA[Number(key) - 1];
            if (criterion)
                this.cycleCriterion(criterion);
            return "toggled";
        }
        if (key === "Enter" && this.canSubmit()) {
            return "submit";
        }
        return null;
    }
}

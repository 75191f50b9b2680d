/** Payload shapes of the review service API. */
export function isDone(payload) {
    return payload.done === true;
}
/** The three review criteria, in keyboard-shortcut order (1, 2, 3). */
export const CRITERIA = ["final_answer_ok", "sub_answers_ok", "focus_ok"];
export const CRITERION_LABELS = {
    final_answer_ok: "Final answer correct",
    sub_answers_ok: "Sub-question answers correct",
    focus_ok: "Visual focus valid",
};

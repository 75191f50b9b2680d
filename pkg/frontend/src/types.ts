/** Payload shapes of the review service API. */

export interface ImageRef {
  id: string;
  path: string;
  width: number | null;
  height: number | null;
}

export interface ChainStep {
  sub_question: string;
  focus: number[];
  answer: string;
}

export interface ReviewRecord {
  id: string;
  images: ImageRef[];
  question: string;
  question_type: "open_ended" | "single_choice";
  choices: string[] | null;
  steps: ChainStep[];
  final_answer: string;
  meta: { source: string; path_length: number; seed: number | null };
}

export interface ReviewItem {
  index: number;
  total: number;
  judged: number;
  record: ReviewRecord;
  image_urls: string[];
}

export interface DoneMarker {
  done: true;
  judged: number;
  total: number;
}

export type NextItemResponse = ReviewItem | DoneMarker;

export function isDone(payload: NextItemResponse): payload is DoneMarker {
  return (payload as DoneMarker).done === true;
}

/** The three review criteria, in keyboard-shortcut order (1, 2, 3). */
export const CRITERIA = ["final_answer_ok", "sub_answers_ok", "focus_ok"] as const;
export type CriterionKey = (typeof CRITERIA)[number];

export const CRITERION_LABELS: Record<CriterionKey, string> = {
  final_answer_ok: "Final answer correct",
  sub_answers_ok: "Sub-question answers correct",
  focus_ok: "Visual focus valid",
};

export interface JudgmentBody {
  annotator: string;
  final_answer_ok: boolean;
  sub_answers_ok: boolean;
  focus_ok: boolean;
}

export interface JudgmentEcho {
  record_id: string;
  annotator_id: string;
  final_answer_ok: boolean;
  sub_answers_ok: boolean;
  focus_ok: boolean;
  submitted_at: number;
}

export interface AgreementReport {
  n_items: number;
  n_raters: number;
  validity_rate: number | null;
  kappa: number | null;
  correct_count_histogram: Record<string, number>;
  incomplete: number;
}

export interface ProgressReport {
  total: number;
  annotators: Record<string, number>;
}

/**
 * Editing session for one question: the local draft of selected LO codes
 * and notes, tracked against the last server state the client saw.
 *
 * Invariants the session enforces:
 * - a draft can only ever contain codes from the question's chapter subset
 *   (delivered with the question), so no save can be rejected for an
 *   out-of-chapter code;
 * - save is meaningful only while dirty;
 * - a failed or conflicted save never touches the draft.
 */
import { ApiError, AnnotationState, QuestionBundle } from "./api.js";

/** The slice of the API a session needs to persist itself. */
export interface LabelStore {
  putLabels(id: string, codes: string[], expectedRevision: number): Promise<AnnotationState>;
  putNotes(id: string, text: string, expectedRevision: number): Promise<AnnotationState>;
}

export type SaveResult =
  | { outcome: "saved"; revision: number }
  | { outcome: "conflict"; serverState: AnnotationState }
  | { outcome: "error"; message: string };

function sameList(a: string[], b: string[]): boolean {
  return a.length === b.length && a.every((value, i) => value === b[i]);
}

export class UiSession {
  readonly questionId: string;
  readonly chapter: string;
  readonly subsetCodes: ReadonlySet<string>;

  lastRevision: number;
  draftSelected: string[];
  draftNotes: string;

  private baseSelected: string[];
  private baseNotes: string;

  constructor(bundle: QuestionBundle) {
    this.questionId = bundle.question.id;
    this.chapter = bundle.question.chapter;
    this.subsetCodes = new Set(bundle.subset.map((lo) => lo.code));
    this.lastRevision = bundle.state.revision;
    this.baseSelected = [...bundle.state.selected];
    this.baseNotes = bundle.state.notes;
    this.draftSelected = [...bundle.state.selected];
    this.draftNotes = bundle.state.notes;
  }

  get labelsDirty(): boolean {
    return !sameList(this.draftSelected, this.baseSelected);
  }

  get notesDirty(): boolean {
    return this.draftNotes !== this.baseNotes;
  }

  get dirty(): boolean {
    return this.labelsDirty || this.notesDirty;
  }

  /** Attach a code to the draft; no-op on duplicates, rejects codes outside
   * the question's chapter subset. Returns whether the draft changed. */
  attach(code: string): boolean {
    if (!this.subsetCodes.has(code) || this.draftSelected.includes(code)) {
      return false;
    }
    this.draftSelected = [...this.draftSelected, code];
    return true;
  }

  remove(code: string): boolean {
    if (!this.draftSelected.includes(code)) {
      return false;
    }
    this.draftSelected = this.draftSelected.filter((c) => c !== code);
    return true;
  }

  setNotes(text: string): void {
    this.draftNotes = text;
  }

  /** Adopt the server's state, discarding the local draft (conflict dialog:
   * "use server version"). */
  adoptServer(state: AnnotationState): void {
    this.lastRevision = state.revision;
    this.baseSelected = [...state.selected];
    this.baseNotes = state.notes;
    this.draftSelected = [...state.selected];
    this.draftNotes = state.notes;
  }

  /** Keep the local draft but accept the server revision so the next save
   * re-applies it (conflict dialog: "re-apply mine"). */
  rebase(state: AnnotationState): void {
    this.lastRevision = state.revision;
    this.baseSelected = [...state.selected];
    this.baseNotes = state.notes;
  }

  /** Push the dirty parts of the draft. On success the draft becomes the
   * new base; on conflict or failure the draft is left untouched. */
  async save(api: LabelStore): Promise<SaveResult> {
    if (!this.dirty) {
      return { outcome: "saved", revision: this.lastRevision };
    }
    const selected = [...this.draftSelected];
    const notes = this.draftNotes;
    try {
      let revision = this.lastRevision;
      if (this.labelsDirty) {
        const state = await api.putLabels(this.questionId, selected, revision);
        revision = state.revision;
        this.baseSelected = [...selected];
      }
      if (notes !== this.baseNotes) {
        const state = await api.putNotes(this.questionId, notes, revision);
        revision = state.revision;
        this.baseNotes = notes;
      }
      this.lastRevision = revision;
      return { outcome: "saved", revision };
    } catch (error) {
      if (error instanceof ApiError && error.kind === "conflict" && error.serverState) {
        return { outcome: "conflict", serverState: error.serverState };
      }
      const message = error instanceof Error ? error.message : String(error);
      return { outcome: "error", message };
    }
  }
}

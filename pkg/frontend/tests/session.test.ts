import { describe, expect, it } from "vitest";

import { AnnotationState, ApiError, QuestionBundle } from "../src/api.js";
import { LabelStore, UiSession } from "../src/session.js";

function lo(code: string, chapter = "Energy") {
  return {
    code,
    name: `Concept for ${code}`,
    item: `item ${code}`,
    action: "Conc.ID",
    provided: "something given",
    outcome: "something produced",
    category: "Physics Laws",
    chapter,
  };
}

function makeBundle(overrides: Partial<AnnotationState> = {}): QuestionBundle {
  return {
    question: {
      id: "q1",
      chapter: "Energy",
      source: "Course",
      dataset: "Energy",
      text: "A block slides down a ramp.",
      ground_truth: [],
      notes: "",
    },
    state: { selected: [], notes: "", revision: 0, modified: "", ...overrides },
    subset: [lo("ME-KE-1"), lo("ME-KE-2"), lo("ME-W-1")],
  };
}

function recordingStore(): LabelStore & { calls: string[] } {
  let revision = 0;
  const calls: string[] = [];
  return {
    calls,
    async putLabels(id, codes, expectedRevision) {
      calls.push(`labels:${codes.join("+")}@${expectedRevision}`);
      revision = expectedRevision + 1;
      return { selected: codes, notes: "", revision, modified: "now" };
    },
    async putNotes(id, text, expectedRevision) {
      calls.push(`notes:${text}@${expectedRevision}`);
      revision = expectedRevision + 1;
      return { selected: [], notes: text, revision, modified: "now" };
    },
  };
}

function conflictingStore(serverState: AnnotationState): LabelStore {
  return {
    async putLabels() {
      throw new ApiError("conflict", "stale revision", serverState);
    },
    async putNotes() {
      throw new ApiError("conflict", "stale revision", serverState);
    },
  };
}

describe("UiSession drafts", () => {
  it("starts clean with the server state", () => {
    const session = new UiSession(makeBundle({ selected: ["ME-KE-1"], notes: "hi", revision: 3 }));
    expect(session.dirty).toBe(false);
    expect(session.draftSelected).toEqual(["ME-KE-1"]);
    expect(session.draftNotes).toBe("hi");
    expect(session.lastRevision).toBe(3);
  });

  it("attach marks dirty and preserves selection order", () => {
    const session = new UiSession(makeBundle());
    expect(session.attach("ME-KE-2")).toBe(true);
    expect(session.attach("ME-KE-1")).toBe(true);
    expect(session.draftSelected).toEqual(["ME-KE-2", "ME-KE-1"]);
    expect(session.dirty).toBe(true);
  });

  it("attaching an already-selected LO is a no-op", () => {
    const session = new UiSession(makeBundle({ selected: ["ME-KE-1"] }));
    expect(session.attach("ME-KE-1")).toBe(false);
    expect(session.draftSelected).toEqual(["ME-KE-1"]);
    expect(session.dirty).toBe(false);
  });

  it("rejects codes outside the chapter subset", () => {
    const session = new UiSession(makeBundle());
    expect(session.attach("LM-ILM-2")).toBe(false);
    expect(session.attach("nonsense")).toBe(false);
    expect(session.draftSelected).toEqual([]);
  });

  it("remove then re-add returns to clean", () => {
    const session = new UiSession(makeBundle({ selected: ["ME-KE-1"] }));
    session.remove("ME-KE-1");
    expect(session.dirty).toBe(true);
    session.attach("ME-KE-1");
    expect(session.dirty).toBe(false);
  });

  it("notes edits mark dirty; reverting clears it", () => {
    const session = new UiSession(makeBundle({ notes: "original" }));
    session.setNotes("changed");
    expect(session.notesDirty).toBe(true);
    session.setNotes("original");
    expect(session.dirty).toBe(false);
  });
});

describe("UiSession.save", () => {
  it("pushes labels then notes, advancing the revision", async () => {
    const store = recordingStore();
    const session = new UiSession(makeBundle());
    session.attach("ME-KE-1");
    session.setNotes("a note");
    const result = await session.save(store);
    expect(result).toEqual({ outcome: "saved", revision: 2 });
    expect(store.calls).toEqual(["labels:ME-KE-1@0", "notes:a note@1"]);
    expect(session.dirty).toBe(false);
    expect(session.lastRevision).toBe(2);
  });

  it("skips untouched parts", async () => {
    const store = recordingStore();
    const session = new UiSession(makeBundle());
    session.setNotes("only notes changed");
    await session.save(store);
    expect(store.calls).toEqual(["notes:only notes changed@0"]);
  });

  it("save on a clean session is a no-op", async () => {
    const store = recordingStore();
    const session = new UiSession(makeBundle({ revision: 5 }));
    const result = await session.save(store);
    expect(result).toEqual({ outcome: "saved", revision: 5 });
    expect(store.calls).toEqual([]);
  });

  it("conflict keeps the draft intact and surfaces the server state", async () => {
    const serverState: AnnotationState = {
      selected: ["ME-KE-2"],
      notes: "someone else",
      revision: 4,
      modified: "now",
    };
    const session = new UiSession(makeBundle());
    session.attach("ME-KE-1");
    session.setNotes("mine");
    const result = await session.save(conflictingStore(serverState));
    expect(result.outcome).toBe("conflict");
    if (result.outcome === "conflict") {
      expect(result.serverState.selected).toEqual(["ME-KE-2"]);
    }
    expect(session.draftSelected).toEqual(["ME-KE-1"]);
    expect(session.draftNotes).toBe("mine");
    expect(session.dirty).toBe(true);
  });

  it("network failure keeps the draft intact", async () => {
    const store: LabelStore = {
      async putLabels() {
        throw new ApiError("network", "service unreachable");
      },
      async putNotes() {
        throw new ApiError("network", "service unreachable");
      },
    };
    const session = new UiSession(makeBundle());
    session.attach("ME-W-1");
    const result = await session.save(store);
    expect(result.outcome).toBe("error");
    expect(session.draftSelected).toEqual(["ME-W-1"]);
    expect(session.dirty).toBe(true);
  });

  it("rebase keeps the draft and re-applies it at the server revision", async () => {
    const serverState: AnnotationState = {
      selected: ["ME-KE-2"],
      notes: "",
      revision: 4,
      modified: "now",
    };
    const session = new UiSession(makeBundle());
    session.attach("ME-KE-1");
    session.rebase(serverState);
    expect(session.draftSelected).toEqual(["ME-KE-1"]);
    expect(session.lastRevision).toBe(4);
    const store = recordingStore();
    const result = await session.save(store);
    expect(result.outcome).toBe("saved");
    expect(store.calls).toEqual(["labels:ME-KE-1@4"]);
  });

  it("adoptServer discards the draft", () => {
    const serverState: AnnotationState = {
      selected: ["ME-KE-2"],
      notes: "server notes",
      revision: 4,
      modified: "now",
    };
    const session = new UiSession(makeBundle());
    session.attach("ME-KE-1");
    session.adoptServer(serverState);
    expect(session.draftSelected).toEqual(["ME-KE-2"]);
    expect(session.draftNotes).toBe("server notes");
    expect(session.dirty).toBe(false);
  });
});

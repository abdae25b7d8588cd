/** Single-page wiring: hash routing between the question index and the
 * labeling screen, search-panel state, save/conflict flow. */
import { ApiClient, ApiError, LO, QuestionBundle } from "./api.js";
import { UiSession } from "./session.js";
import { banner, conflictDialog, el, loEntry, questionIndex, questionPanel } from "./views.js";

const api = new ApiClient("");
const app = document.getElementById("app")!;

function route(): void {
  const match = location.hash.match(/^#\/q\/(.+)$/);
  if (match) {
    void showQuestion(decodeURIComponent(match[1]));
  } else {
    void showIndex();
  }
}

async function showIndex(): Promise<void> {
  app.replaceChildren(el("p", { class: "loading" }, ["Loading questions…"]));
  try {
    const summaries = await api.listQuestions();
    app.replaceChildren(questionIndex(summaries, (id) => (location.hash = `#/q/${id}`)));
  } catch (error) {
    app.replaceChildren(banner("error", describe(error), () => void showIndex()));
  }
}

async function showQuestion(id: string): Promise<void> {
  app.replaceChildren(el("p", { class: "loading" }, ["Loading question…"]));
  let bundle: QuestionBundle;
  try {
    bundle = await api.getQuestion(id);
  } catch (error) {
    if (error instanceof ApiError && error.kind === "not_found") {
      app.replaceChildren(banner("error", `No question with id ${id}.`));
      return;
    }
    app.replaceChildren(banner("error", describe(error), () => void showQuestion(id)));
    return;
  }
  renderLabeler(bundle);
}

function describe(error: unknown): string {
  if (error instanceof ApiError && error.kind === "network") {
    return "Cannot reach the annotation service. Your draft is kept locally.";
  }
  return error instanceof Error ? error.message : String(error);
}

function renderLabeler(bundle: QuestionBundle): void {
  const session = new UiSession(bundle);
  const subsetByCode = new Map(bundle.subset.map((lo) => [lo.code, lo]));

  const back = el("a", { href: "#/", class: "back" }, ["← all questions"]);
  const statusLine = el("div", { class: "status" });
  const selectedList = el("ul", { class: "selected-los" });
  const resultsList = el("ul", { class: "search-results" });
  const dialogHost = el("div", { class: "dialog-host" });

  const searchInput = el("input", {
    type: "search",
    placeholder: "Search code, name, or description…",
    class: "search",
  });
  const categoryFilter = el("select", { class: "filter" }, [
    el("option", { value: "" }, ["All categories"]),
    el("option", { value: "Physics Laws" }, ["Physics Laws"]),
    el("option", { value: "Representations" }, ["Representations"]),
    el("option", { value: "Special Cases" }, ["Special Cases"]),
  ]);
  const actionFilter = el("select", { class: "filter" }, [
    el("option", { value: "" }, ["All actions"]),
    el("option", { value: "Conc.ID" }, ["Conc.ID"]),
    el("option", { value: "Conc.Prop" }, ["Conc.Prop"]),
    el("option", { value: "Proc.App" }, ["Proc.App"]),
    el("option", { value: "Rep.Map" }, ["Rep.Map"]),
  ]);

  const notesArea = el("textarea", { class: "notes", rows: "4" });
  notesArea.value = session.draftNotes;
  notesArea.addEventListener("input", () => {
    session.setNotes(notesArea.value);
    refresh();
  });

  const saveButton = el("button", { class: "save" }, ["Save"]);
  saveButton.addEventListener("click", () => void save());

  function refresh(): void {
    saveButton.disabled = !session.dirty;
    statusLine.textContent = session.dirty
      ? "Unsaved changes"
      : `Saved at revision ${session.lastRevision}`;
    selectedList.replaceChildren(
      ...session.draftSelected.map((code) => {
        const lo = subsetByCode.get(code)!;
        return loEntry(lo, "Remove", (c) => {
          session.remove(c);
          refresh();
        });
      }),
    );
    if (!session.draftSelected.length) {
      selectedList.replaceChildren(el("li", { class: "empty" }, ["No objectives selected yet."]));
    }
  }

  async function runSearch(): Promise<void> {
    let results: LO[];
    try {
      results = await api.searchLOs(searchInput.value, {
        chapter: session.chapter,
        category: categoryFilter.value || undefined,
        action: actionFilter.value || undefined,
      });
    } catch (error) {
      resultsList.replaceChildren(el("li", { class: "empty" }, [describe(error)]));
      return;
    }
    resultsList.replaceChildren(
      ...results.map((lo) =>
        loEntry(lo, "Attach", (code) => {
          session.attach(code);
          refresh();
        }),
      ),
    );
    if (!results.length) {
      resultsList.replaceChildren(el("li", { class: "empty" }, ["No matching objectives."]));
    }
  }

  async function save(): Promise<void> {
    const result = await session.save(api);
    if (result.outcome === "saved") {
      dialogHost.replaceChildren();
      refresh();
      return;
    }
    if (result.outcome === "conflict") {
      dialogHost.replaceChildren(
        conflictDialog(
          session.draftSelected,
          session.draftNotes,
          result.serverState,
          () => {
            session.adoptServer(result.serverState);
            notesArea.value = session.draftNotes;
            dialogHost.replaceChildren();
            refresh();
          },
          () => {
            session.rebase(result.serverState);
            dialogHost.replaceChildren();
            void save();
          },
        ),
      );
      return;
    }
    dialogHost.replaceChildren(banner("error", result.message, () => void save()));
  }

  searchInput.addEventListener("input", () => void runSearch());
  categoryFilter.addEventListener("change", () => void runSearch());
  actionFilter.addEventListener("change", () => void runSearch());

  app.replaceChildren(
    back,
    questionPanel(bundle),
    el("div", { class: "workbench" }, [
      el("section", { class: "panel search-panel" }, [
        el("h3", {}, ["Learning objectives"]),
        el("div", { class: "controls" }, [searchInput, categoryFilter, actionFilter]),
        resultsList,
      ]),
      el("section", { class: "panel selected-panel" }, [
        el("h3", {}, ["Selected Objectives"]),
        selectedList,
        el("h3", {}, ["Notes"]),
        notesArea,
        el("div", { class: "save-row" }, [saveButton, statusLine]),
      ]),
    ]),
    dialogHost,
  );
  refresh();
  void runSearch();
}

window.addEventListener("hashchange", route);
route();

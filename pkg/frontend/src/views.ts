/** DOM builders for the two screens: question index and question detail. */
import { LO, QuestionBundle, QuestionSummary, AnnotationState } from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function banner(kind: "error" | "info", text: string, onRetry?: () => void): HTMLElement {
  const children: (Node | string)[] = [text];
  if (onRetry) {
    const button = el("button", { class: "retry" }, ["Retry"]);
    button.addEventListener("click", onRetry);
    children.push(" ", button);
  }
  return el("div", { class: `banner ${kind}` }, children);
}

export function questionIndex(
  summaries: QuestionSummary[],
  onOpen: (id: string) => void,
): HTMLElement {
  const rows = summaries.map((summary) => {
    const link = el("a", { href: `#/q/${summary.id}`, class: "qlink" }, [summary.id]);
    link.addEventListener("click", (event) => {
      event.preventDefault();
      onOpen(summary.id);
    });
    return el("tr", {}, [
      el("td", {}, [link]),
      el("td", {}, [summary.chapter]),
      el("td", {}, [summary.dataset]),
      el("td", { class: "num" }, [String(summary.label_count)]),
      el("td", {}, [summary.labeled ? "labeled" : "todo"]),
      el("td", { class: "num" }, [String(summary.revision)]),
    ]);
  });
  return el("div", { class: "index" }, [
    el("h1", {}, ["Questions"]),
    el("table", {}, [
      el("thead", {}, [
        el("tr", {}, ["Id", "Chapter", "Dataset", "Labels", "Status", "Rev"].map((h) => el("th", {}, [h]))),
      ]),
      el("tbody", {}, rows),
    ]),
  ]);
}

export function questionPanel(bundle: QuestionBundle): HTMLElement {
  const q = bundle.question;
  return el("section", { class: "panel question" }, [
    el("h2", {}, [q.id]),
    el("p", { class: "meta" }, [`${q.chapter} · ${q.dataset} · ${q.source}`]),
    el("p", { class: "text" }, [q.text]),
  ]);
}

export function loEntry(lo: LO, actionLabel: string, onAction: (code: string) => void): HTMLElement {
  const button = el("button", { class: "lo-action" }, [actionLabel]);
  button.addEventListener("click", () => onAction(lo.code));
  return el("li", { class: "lo" }, [
    el("span", { class: "code" }, [lo.code]),
    el("span", { class: "name" }, [` ${lo.name} — ${lo.item} `]),
    el("span", { class: "action-type" }, [`[${lo.action}]`]),
    button,
  ]);
}

export function conflictDialog(
  draftSelected: string[],
  draftNotes: string,
  serverState: AnnotationState,
  onUseServer: () => void,
  onReapply: () => void,
): HTMLElement {
  const useServer = el("button", {}, ["Use server version"]);
  useServer.addEventListener("click", onUseServer);
  const reapply = el("button", {}, ["Re-apply my draft"]);
  reapply.addEventListener("click", onReapply);
  return el("div", { class: "conflict" }, [
    el("h3", {}, ["Save conflict"]),
    el("p", {}, ["The question changed on the server since you loaded it."]),
    el("div", { class: "sides" }, [
      el("div", {}, [
        el("h4", {}, ["Your draft"]),
        el("p", {}, [draftSelected.join(", ") || "(none)"]),
        el("pre", {}, [draftNotes]),
      ]),
      el("div", {}, [
        el("h4", {}, [`Server (rev ${serverState.revision})`]),
        el("p", {}, [serverState.selected.join(", ") || "(none)"]),
        el("pre", {}, [serverState.notes]),
      ]),
    ]),
    el("div", { class: "actions" }, [useServer, " ", reapply]),
  ]);
}

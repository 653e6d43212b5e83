import { ApiClient, ApiError } from "./api.js";
import type { FeedbackBody, SessionView } from "./types.js";
import {
  ORDINAL_COLORS,
  ORDINAL_LABELS,
  changedDimensions,
  formatValue,
  historyChartLayout,
  preferencesDisabled,
} from "./view.js";

interface Selections {
  preference: "new" | "old" | null;
  ordinal: 1 | 2 | 3 | null;
}

const SVG_NS = "http://www.w3.org/2000/svg";

/** The operator page: a render-only mirror of GET /session plus the pending
 * button selections. All state that survives a reload lives on the server;
 * re-fetching the session reproduces the page exactly.
 */
export class OperatorApp {
  private view: SessionView | null = null;
  private selections: Selections = { preference: null, ordinal: null };
  private submitting = false;
  private errorMessage: string | null = null;
  private lastBody: FeedbackBody | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private blind = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly pollMs = 1000,
  ) {}

  async start(): Promise<void> {
    await this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refresh(): Promise<void> {
    if (this.submitting) return; // one in-flight mutation at a time
    try {
      const view = await this.api.getSession();
      if (this.view && view.iteration !== this.view.iteration) {
        this.selections = { preference: null, ordinal: null };
      }
      this.view = view;
      this.render();
    } catch (err) {
      this.errorMessage = err instanceof Error ? err.message : String(err);
      this.render();
    }
  }

  private async submit(body: FeedbackBody): Promise<void> {
    if (this.submitting) return; // double-click: the first event wins
    this.submitting = true;
    this.lastBody = body;
    this.render();
    try {
      this.view = await this.api.submitFeedback(body);
      this.errorMessage = null;
      this.selections = { preference: null, ordinal: null };
    } catch (err) {
      // show the service's message verbatim; keep the view untouched
      this.errorMessage =
        err instanceof ApiError ? err.message : `network failure: ${err}`;
    } finally {
      this.submitting = false;
      this.render();
    }
  }

  private submitSelections(): void {
    const view = this.view;
    if (!view) return;
    const { preference, ordinal } = this.selections;
    if (preference === null && ordinal === null) return;
    void this.submit({
      preference,
      ordinal,
      skip: false,
      iteration: view.iteration,
    });
  }

  private skip(): void {
    const view = this.view;
    if (!view) return;
    void this.submit({
      preference: null,
      ordinal: null,
      skip: true,
      iteration: view.iteration,
    });
  }

  render(): void {
    const root = this.root;
    root.textContent = "";
    const view = this.view;
    if (!view) {
      root.append(
        this.banner(this.errorMessage ?? "connecting to session service..."),
      );
      return;
    }
    root.append(this.header(view));
    if (this.errorMessage) {
      const banner = this.banner(this.errorMessage);
      if (this.lastBody && !view.completed) {
        const retry = document.createElement("button");
        retry.dataset.testid = "retry";
        retry.textContent = "retry";
        retry.addEventListener("click", () => void this.submit(this.lastBody!));
        banner.append(" ", retry);
      }
      root.append(banner);
    }
    root.append(this.comparison(view));
    if (view.latest_metrics) root.append(this.metrics(view));
    if (view.history.length >= 1) root.append(this.history(view));
    if (view.completed) root.append(this.summary(view));
  }

  private banner(text: string): HTMLElement {
    const el = document.createElement("div");
    el.className = "banner";
    el.dataset.testid = "banner";
    el.textContent = text;
    return el;
  }

  private header(view: SessionView): HTMLElement {
    const el = document.createElement("header");
    const progress = document.createElement("span");
    progress.dataset.testid = "progress";
    progress.textContent = `iteration ${view.iteration + 1} of ${view.budget}`;
    const blind = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = this.blind;
    box.dataset.testid = "blind-toggle";
    box.addEventListener("change", () => {
      this.blind = box.checked;
      this.render();
    });
    blind.append(box, " blind mode (hide gain values)");
    el.append(progress, blind);
    return el;
  }

  private comparison(view: SessionView): HTMLElement {
    const section = document.createElement("section");
    section.dataset.testid = "comparison";

    const table = document.createElement("table");
    const head = table.insertRow();
    for (const text of ["dimension", "current", "previous"]) {
      const th = document.createElement("th");
      th.textContent = text;
      head.append(th);
    }
    const prev = view.previous_action;
    const changed = new Set(
      prev ? changedDimensions(view.current_action.indices, prev.indices) : [],
    );
    view.dimension_names.forEach((name, i) => {
      const row = table.insertRow();
      row.dataset.testid = `dim-${name}`;
      if (changed.has(i)) row.className = "changed";
      row.insertCell().textContent = name;
      row.insertCell().textContent = this.blind
        ? "•••"
        : formatValue(view.current_action.values[i]!);
      row.insertCell().textContent = prev
        ? this.blind
          ? "•••"
          : formatValue(prev.values[i]!)
        : "—";
    });
    section.append(table);

    const prefDisabled =
      preferencesDisabled(view) || this.submitting;
    const controls = document.createElement("div");
    controls.className = "controls";

    for (const [pref, label] of [
      ["new", "prefer new"],
      ["old", "prefer old"],
    ] as const) {
      const btn = document.createElement("button");
      btn.dataset.testid = `prefer-${pref}`;
      btn.textContent = label;
      btn.disabled = prefDisabled;
      btn.classList.toggle("selected", this.selections.preference === pref);
      btn.addEventListener("click", () => {
        this.selections.preference =
          this.selections.preference === pref ? null : pref;
        this.render();
      });
      controls.append(btn);
    }

    for (const label of [1, 2, 3] as const) {
      const btn = document.createElement("button");
      btn.dataset.testid = `ordinal-${label}`;
      btn.textContent = ORDINAL_LABELS[label];
      btn.disabled = view.completed || this.submitting;
      btn.classList.toggle("selected", this.selections.ordinal === label);
      btn.addEventListener("click", () => {
        this.selections.ordinal =
          this.selections.ordinal === label ? null : label;
        this.render();
      });
      controls.append(btn);
    }

    const submit = document.createElement("button");
    submit.dataset.testid = "submit";
    submit.textContent = "submit";
    submit.disabled =
      view.completed ||
      this.submitting ||
      (this.selections.preference === null && this.selections.ordinal === null);
    submit.addEventListener("click", () => this.submitSelections());
    controls.append(submit);

    const skip = document.createElement("button");
    skip.dataset.testid = "skip";
    skip.textContent = "skip";
    skip.disabled = view.completed || this.submitting;
    skip.addEventListener("click", () => this.skip());
    controls.append(skip);

    section.append(controls);
    return section;
  }

  private metrics(view: SessionView): HTMLElement {
    const m = view.latest_metrics!;
    const el = document.createElement("section");
    el.dataset.testid = "metrics";
    const dl = document.createElement("dl");
    const rows: [string, string][] = [
      ["tracking RMS", formatValue(m.tracking_rms)],
      ["torque chatter", formatValue(m.torque_chatter)],
      ["saturation", `${(100 * m.saturation_frac).toFixed(1)}%`],
      ["decrease-rate violation", formatValue(m.vdot_violation)],
      ["failed", String(m.failed)],
    ];
    for (const [k, v] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = k;
      const dd = document.createElement("dd");
      dd.textContent = v;
      dl.append(dt, dd);
    }
    el.append(dl);
    return el;
  }

  private history(view: SessionView): HTMLElement {
    const el = document.createElement("section");
    el.dataset.testid = "history";
    const layout = historyChartLayout(view.history, view.ordinals);
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
    svg.setAttribute("width", String(layout.width));
    svg.setAttribute("height", String(layout.height));
    if (layout.points.length > 1) {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", layout.polyline);
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", "#1f77b4");
      svg.append(line);
    }
    for (const p of layout.points) {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(p.x));
      dot.setAttribute("cy", String(p.y));
      dot.setAttribute("r", "4");
      dot.setAttribute("fill", p.color);
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `iteration ${p.iteration}: μ = ${formatValue(p.mu)}`;
      dot.append(title);
      svg.append(dot);
    }
    el.append(svg, this.legend());
    return el;
  }

  private legend(): HTMLElement {
    const el = document.createElement("div");
    el.dataset.testid = "legend";
    for (const label of [1, 2, 3] as const) {
      const item = document.createElement("span");
      item.dataset.color = ORDINAL_COLORS[label];
      item.textContent = ORDINAL_LABELS[label];
      item.style.color = ORDINAL_COLORS[label];
      el.append(item);
    }
    return el;
  }

  private summary(view: SessionView): HTMLElement {
    const el = document.createElement("section");
    el.dataset.testid = "summary";
    const best = view.believed_best;
    const mu = view.history.length
      ? view.history[view.history.length - 1]!.best_mu
      : null;
    const text = best
      ? `session complete — believed best action #${best.id}` +
        (this.blind ? "" : ` [${best.values.map(formatValue).join(", ")}]`) +
        (mu !== null ? ` with utility ${formatValue(mu)}` : "")
      : "session complete";
    el.textContent = text;
    return el;
  }
}

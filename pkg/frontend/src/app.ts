import { Api, ApiError } from "./api.js";
import { fitExtent, fromClick, renderMap, type Extent, type Pin } from "./map.js";
import {
  isDone,
  type AppState,
  type Candidate,
  type CreateSessionBody,
  type SessionPayload,
} from "./types.js";

const DEFAULT_EXTENT: Extent = { minLon: -1, minLat: -1, maxLon: 1, maxLat: 1 };

function initialState(): AppState {
  return {
    view: "query",
    form: { lat: null, lon: null, words: "", k: "", theta: "", strategy: "" },
    sessionId: null,
    round: null,
    results: null,
    history: [],
    queryWords: [],
    queryPoint: null,
    error: null,
    inFlight: false,
  };
}

function escapeHtml(s: string): string {
  return s.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

// Scores are printed verbatim from the API payload: the UI never rounds or
// recomputes them, so what the user compares is exactly what the engine said.
function verbatim(n: number): string {
  return String(n);
}

export class App {
  state: AppState = initialState();
  private objectWords = new Map<number, number[]>();

  constructor(
    private api: Api,
    private root: HTMLElement,
  ) {
    root.addEventListener("click", (ev) => this.onClick(ev));
    root.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.startSession();
    });
  }

  // -- actions -------------------------------------------------------------

  async startSession(): Promise<void> {
    const f = this.readForm();
    if (f.lat === null || f.lon === null) {
      this.setError("pick a location first (click the map or fill lat/lon)");
      return;
    }
    const words = parseWords(this.state.form.words);
    if (words.length === 0) {
      this.setError("enter at least one word id");
      return;
    }
    const body: CreateSessionBody = { lat: f.lat, lon: f.lon, words };
    if (this.state.form.k) body.k = Number(this.state.form.k);
    if (this.state.form.theta) body.theta = Number(this.state.form.theta);
    if (this.state.form.strategy) body.strategy = this.state.form.strategy;
    await this.withFlight(async () => {
      const payload = await this.api.createSession(body);
      this.state.queryWords = words;
      this.state.queryPoint = { lat: f.lat!, lon: f.lon! };
      this.state.history = [];
      await this.applyPayload(payload);
    });
  }

  async pick(chosenId: number): Promise<void> {
    const round = this.state.round;
    if (!round || this.state.inFlight) {
      return;
    }
    await this.withFlight(async () => {
      const payload = await this.api.feedback(round.session_id, chosenId);
      this.state.history.push({
        round: round.round,
        chosenId,
        candidateIds: round.candidates.map((c) => c.id),
      });
      await this.applyPayload(payload);
    });
  }

  async stop(): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) {
      return;
    }
    await this.withFlight(async () => {
      const payload = await this.api.stop(sid);
      await this.applyPayload(payload);
    });
  }

  async loadSample(): Promise<void> {
    await this.withFlight(async () => {
      const obj = await this.api.getObject(0);
      this.state.form.words = obj.words.slice(0, 8).join(",");
      this.state.form.lat = obj.lat;
      this.state.form.lon = obj.lon;
    });
  }

  reset(): void {
    this.state = initialState();
    this.render();
  }

  mapClicked(x: number, y: number): void {
    if (this.state.view !== "query") {
      return;
    }
    const point = fromClick(DEFAULT_EXTENT, x, y);
    this.state.form.lat = Number(point.lat.toFixed(6));
    this.state.form.lon = Number(point.lon.toFixed(6));
    this.render();
  }

  // -- plumbing ------------------------------------------------------------

  private async withFlight(body: () => Promise<void>): Promise<void> {
    this.state.inFlight = true;
    this.state.error = null;
    this.render();
    try {
      await body();
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // stale session: fall back to the query form
        const form = this.state.form;
        this.state = initialState();
        this.state.form = form;
        this.state.error = `session expired (${err.message}); start a new one`;
      } else {
        this.state.error = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.state.inFlight = false;
      this.render();
    }
  }

  private async applyPayload(payload: SessionPayload): Promise<void> {
    this.state.sessionId = payload.session_id;
    if (isDone(payload)) {
      this.state.results = payload;
      this.state.round = null;
      this.state.view = "results";
      return;
    }
    this.state.round = payload;
    this.state.results = null;
    this.state.view = "round";
    await this.fetchShownWords(payload.candidates);
  }

  private async fetchShownWords(candidates: Candidate[]): Promise<void> {
    const missing = candidates.filter((c) => !this.objectWords.has(c.id));
    const fetched = await Promise.all(
      missing.map((c) => this.api.getObject(c.id).catch(() => null)),
    );
    for (const obj of fetched) {
      if (obj !== null) {
        this.objectWords.set(obj.id, obj.words);
      }
    }
  }

  private readForm(): { lat: number | null; lon: number | null } {
    const latInput = this.root.querySelector<HTMLInputElement>("#lat");
    const lonInput = this.root.querySelector<HTMLInputElement>("#lon");
    const wordsInput = this.root.querySelector<HTMLInputElement>("#words");
    const kInput = this.root.querySelector<HTMLInputElement>("#k");
    const thetaInput = this.root.querySelector<HTMLInputElement>("#theta");
    const strategyInput = this.root.querySelector<HTMLSelectElement>("#strategy");
    if (wordsInput) this.state.form.words = wordsInput.value;
    if (kInput) this.state.form.k = kInput.value;
    if (thetaInput) this.state.form.theta = thetaInput.value;
    if (strategyInput) this.state.form.strategy = strategyInput.value;
    if (latInput && latInput.value !== "") this.state.form.lat = Number(latInput.value);
    if (lonInput && lonInput.value !== "") this.state.form.lon = Number(lonInput.value);
    return { lat: this.state.form.lat, lon: this.state.form.lon };
  }

  private setError(message: string): void {
    this.state.error = message;
    this.render();
  }

  private onClick(ev: Event): void {
    const target = ev.target as HTMLElement | null;
    if (!target) {
      return;
    }
    const actionEl = target.closest<HTMLElement>("[data-action]");
    if (actionEl) {
      const action = actionEl.dataset.action!;
      if (action === "pick" && !actionEl.hasAttribute("disabled")) {
        void this.pick(Number(actionEl.dataset.id));
      } else if (action === "stop") {
        void this.stop();
      } else if (action === "new-session") {
        this.reset();
      } else if (action === "dismiss-error") {
        this.state.error = null;
        this.render();
      } else if (action === "load-sample") {
        void this.loadSample();
      }
      return;
    }
    const map = target.closest<SVGSVGElement>("svg[data-role=map]");
    if (map && this.state.view === "query") {
      const rect = map.getBoundingClientRect();
      const me = ev as MouseEvent;
      this.mapClicked(me.clientX - rect.left, me.clientY - rect.top);
    }
  }

  // -- rendering -----------------------------------------------------------

  render(): void {
    const parts: string[] = [];
    if (this.state.error) {
      parts.push(
        `<div class="banner" data-role="error">${escapeHtml(this.state.error)}` +
          `<button data-action="dismiss-error">x</button></div>`,
      );
    }
    if (this.state.view === "query") {
      parts.push(this.renderQueryForm());
    } else if (this.state.view === "round" && this.state.round) {
      parts.push(this.renderRound());
    } else if (this.state.view === "results" && this.state.results) {
      parts.push(this.renderResults());
    }
    this.root.innerHTML = parts.join("");
  }

  private renderQueryForm(): string {
    const f = this.state.form;
    const pins: Pin[] =
      f.lat !== null && f.lon !== null
        ? [{ lat: f.lat, lon: f.lon, label: "query", kind: "query" }]
        : [];
    return `
<section class="query" data-view="query">
  <h1>geoprefer</h1>
  <p>Click the plane to set the query location, list word ids, pick your options, go.</p>
  ${renderMap(pins, DEFAULT_EXTENT, true)}
  <form data-role="query-form">
    <label>lat <input id="lat" type="number" step="any" value="${f.lat ?? ""}"></label>
    <label>lon <input id="lon" type="number" step="any" value="${f.lon ?? ""}"></label>
    <label>words <input id="words" placeholder="e.g. 3,17,42" value="${escapeHtml(f.words)}"></label>
    <label>k <input id="k" type="number" min="1" placeholder="20 (service default)" value="${f.k}"></label>
    <label>theta <input id="theta" type="number" min="2" placeholder="8 (service default)" value="${f.theta}"></label>
    <label>strategy
      <select id="strategy">
        <option value="">densest (service default)</option>
        <option value="densest"${f.strategy === "densest" ? " selected" : ""}>densest</option>
        <option value="random"${f.strategy === "random" ? " selected" : ""}>random</option>
      </select>
    </label>
    <button type="submit" data-role="start" ${this.state.inFlight ? "disabled" : ""}>start session</button>
    <button type="button" data-action="load-sample" ${this.state.inFlight ? "disabled" : ""}>load sample query</button>
  </form>
</section>`;
  }

  private overlapNote(candidate: Candidate): string {
    const words = this.objectWords.get(candidate.id);
    if (!words || this.state.queryWords.length === 0) {
      return "";
    }
    const querySet = new Set(this.state.queryWords);
    const matched = words.filter((w) => querySet.has(w)).length;
    return `matches ${matched} of ${this.state.queryWords.length} query words`;
  }

  private renderRound(): string {
    const round = this.state.round!;
    const pins: Pin[] = round.candidates.map((c) => ({
      lat: c.lat,
      lon: c.lon,
      label: `#${c.id}`,
      kind: "candidate" as const,
    }));
    if (this.state.queryPoint) {
      pins.push({ ...this.state.queryPoint, label: "query", kind: "query" });
    }
    const extent = fitExtent(pins, DEFAULT_EXTENT);
    const cards = round.candidates
      .map((c) => {
        const media = c.image_url
          ? `<img src="${escapeHtml(c.image_url)}" alt="object ${c.id}">`
          : `<div class="placeholder">${escapeHtml(this.overlapNote(c) || "no image")}</div>`;
        return `
<button class="card" data-action="pick" data-id="${c.id}"
        data-proximity="${verbatim(c.proximity)}" data-similarity="${verbatim(c.similarity)}"
        ${this.state.inFlight ? "disabled" : ""}>
  ${media}
  <div class="card-meta">
    <div class="card-title">object ${c.id}</div>
    <div class="card-score">proximity ${verbatim(c.proximity)}</div>
    <div class="card-score">similarity ${verbatim(c.similarity)}</div>
  </div>
</button>`;
      })
      .join("");
    const history = this.state.history
      .map((h) => `<span class="chip">r${h.round}: picked #${h.chosenId}</span>`)
      .join("");
    return `
<section class="round" data-view="round" data-round="${round.round}">
  <h1>round ${round.round}</h1>
  <p>Click your favourite. ${round.candidates.length} candidates shown.</p>
  <div class="history" data-role="history">${history}</div>
  ${renderMap(pins, extent, false)}
  <div class="cards" data-role="cards">${cards}</div>
  <button data-action="stop" ${this.state.inFlight ? "disabled" : ""}>stop and estimate now</button>
</section>`;
  }

  private renderResults(): string {
    const res = this.state.results!;
    const pins: Pin[] = res.results.map((r) => ({
      lat: r.lat,
      lon: r.lon,
      label: `#${r.id}`,
      kind: "result" as const,
    }));
    if (this.state.queryPoint) {
      pins.push({ ...this.state.queryPoint, label: "query", kind: "query" });
    }
    const extent = fitExtent(pins, DEFAULT_EXTENT);
    const rows = res.results
      .map(
        (r, i) => `
<li class="result-row" data-id="${r.id}" data-score="${verbatim(r.score)}">
  <span class="rank">${i + 1}.</span>
  <span class="result-id">object ${r.id}</span>
  <span class="result-score">score ${verbatim(r.score)}</span>
  <span class="result-loc">(${verbatim(r.lat)}, ${verbatim(r.lon)})</span>
</li>`,
      )
      .join("");
    const weights = res.p_hat.words
      .map((word, i) => ({ word, weight: res.p_hat.weights[i] }))
      .sort((a, b) => b.weight - a.weight)
      .slice(0, 10);
    const maxWeight = Math.max(...weights.map((w) => w.weight), 1e-12);
    const bars = weights
      .map(
        (w) => `
<div class="bar-row" data-word="${w.word}" data-weight="${verbatim(w.weight)}">
  <span class="bar-label">word ${w.word}</span>
  <span class="bar" style="width:${Math.max(1, (w.weight / maxWeight) * 200)}px"></span>
  <span class="bar-value">${verbatim(w.weight)}</span>
</div>`,
      )
      .join("");
    return `
<section class="results" data-view="results">
  <h1>final top-${res.results.length}</h1>
  <p>${res.rounds_used} feedback rounds used. Geographic weight p0 = ${verbatim(res.p_hat.p0)}.</p>
  ${renderMap(pins, extent, false)}
  <ol class="result-list" data-role="results">${rows}</ol>
  <h2>top estimated word weights</h2>
  <div class="weights" data-role="weights">${bars}</div>
  <button data-action="new-session">new session</button>
</section>`;
  }
}

export function parseWords(text: string): number[] {
  const out = new Set<number>();
  for (const part of text.split(/[\s,]+/)) {
    if (part === "") continue;
    const n = Number(part);
    if (!Number.isInteger(n) || n < 0) {
      return [];
    }
    out.add(n);
  }
  return [...out].sort((a, b) => a - b);
}

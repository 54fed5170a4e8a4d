import { ApiClient, ApiError } from "./api.js";
import { renderGrid } from "./grid.js";
import { toView, type SlotView } from "./types.js";

export interface AppOptions {
  pollIntervalMs?: number;
  maxBackoffMs?: number;
  /** Injected for tests; defaults to window timers. */
  schedule?: (fn: () => void, ms: number) => unknown;
  openUrl?: (url: string) => void;
}

export interface AppElements {
  grid: HTMLElement;
  message: HTMLElement;
  banner: HTMLElement;
  annotated: HTMLImageElement;
  reserveAll: HTMLButtonElement;
}

/**
 * Event loop of the dashboard: one in-flight fetch at a time, actions queue
 * behind it, the grid only re-renders from confirmed server state (no
 * optimistic updates), and poll failures back off exponentially.
 */
export class App {
  private readonly pollInterval: number;
  private readonly maxBackoff: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly openUrl: (url: string) => void;
  private chain: Promise<void> = Promise.resolve();
  private lastRendered = "";
  private failures = 0;
  private stopped = false;

  constructor(
    private readonly api: ApiClient,
    private readonly el: AppElements,
    private readonly myToken: string,
    options: AppOptions = {},
  ) {
    this.pollInterval = options.pollIntervalMs ?? 5000;
    this.maxBackoff = options.maxBackoffMs ?? 60000;
    this.schedule = options.schedule ?? ((fn, ms) => window.setTimeout(fn, ms));
    this.openUrl = options.openUrl ?? ((url) => window.open(url, "_blank"));
    this.el.reserveAll.addEventListener("click", () => this.reserveAllAction());
  }

  /** Delay before the next poll, growing 2x per consecutive failure. */
  nextDelay(): number {
    if (this.failures === 0) {
      return this.pollInterval;
    }
    return Math.min(this.pollInterval * 2 ** this.failures, this.maxBackoff);
  }

  start(): void {
    const loop = () => {
      if (this.stopped) {
        return;
      }
      void this.refresh().finally(() => this.schedule(loop, this.nextDelay()));
    };
    loop();
  }

  stop(): void {
    this.stopped = true;
  }

  /** One poll: fetch slot state, diff-render, refresh the image panel. */
  refresh(): Promise<void> {
    this.chain = this.chain.then(() => this.doRefresh());
    return this.chain;
  }

  private async doRefresh(): Promise<void> {
    try {
      const doc = await this.api.fetchSlots();
      this.failures = 0;
      this.el.banner.hidden = true;
      this.render(doc.slots.map((s) => toView(s, this.myToken)));
      this.el.annotated.src = this.api.annotatedUrl();
    } catch {
      this.failures += 1;
      this.el.banner.hidden = false;
      this.el.banner.textContent = "Connection lost, retrying…";
      // Stale grid is deliberately retained.
    }
  }

  private render(views: SlotView[]): void {
    const fingerprint = JSON.stringify(views);
    if (fingerprint === this.lastRendered) {
      return; // no DOM churn when nothing changed
    }
    this.lastRendered = fingerprint;
    const grid = renderGrid(views, {
      onReserve: (i) => this.reserveAction(i),
      onRelease: (i) => this.releaseAction(i),
      onNavigate: (i) => this.navigateAction(i),
    });
    this.el.grid.replaceChildren(grid);
  }

  private act(label: string, call: () => Promise<unknown>): Promise<void> {
    this.chain = this.chain.then(async () => {
      try {
        await call();
        this.el.message.textContent = "";
      } catch (err) {
        this.el.message.textContent =
          err instanceof ApiError ? `${label}: ${err.message}` : `${label} failed`;
        return; // grid state untouched; next refresh shows server truth
      }
      await this.doRefresh();
    });
    return this.chain;
  }

  reserveAction(index: number): Promise<void> {
    return this.act(`Reserve slot ${index + 1}`, () => this.api.reserve(index));
  }

  releaseAction(index: number): Promise<void> {
    return this.act(`Release slot ${index + 1}`, () => this.api.release(index));
  }

  reserveAllAction(): Promise<void> {
    return this.act("Reserve all", () => this.api.reserveAll());
  }

  navigateAction(index: number): Promise<void> {
    this.chain = this.chain.then(async () => {
      try {
        const nav = await this.api.navigation(index);
        this.openUrl(nav.url);
      } catch {
        this.el.message.textContent = `No navigation for slot ${index + 1}`;
      }
    });
    return this.chain;
  }
}

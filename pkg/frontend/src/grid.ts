import type { SlotView } from "./types.js";

export interface GridHandlers {
  onReserve: (index: number) => void;
  onRelease: (index: number) => void;
  onNavigate: (index: number) => void;
}

function formatGps(view: SlotView): string {
  if (!view.gps) {
    return "no gps";
  }
  return `${view.gps.lat.toFixed(6)}, ${view.gps.lon.toFixed(6)}`;
}

/**
 * Pure view of a slot list: one cell per slot, green for vacant, red for
 * occupied, red with a "Reserved" label for reserved. Vacant cells expose
 * Reserve and Navigate controls; a reserved-by-me cell exposes Release.
 */
export function renderGrid(slots: SlotView[], handlers: GridHandlers): HTMLElement {
  const grid = document.createElement("div");
  grid.className = "slot-grid";
  for (const view of slots) {
    const cell = document.createElement("div");
    cell.className = `slot-cell ${view.visualState}`;
    cell.dataset.index = String(view.index);

    const title = document.createElement("div");
    title.className = "slot-title";
    title.textContent = `Slot ${view.index + 1}`;
    cell.appendChild(title);

    const state = document.createElement("div");
    state.className = "slot-state";
    state.textContent =
      view.visualState === "reserved"
        ? "Reserved"
        : view.visualState === "occupied"
          ? "Occupied"
          : "Vacant";
    cell.appendChild(state);

    const coords = document.createElement("div");
    coords.className = "slot-gps";
    coords.textContent = formatGps(view);
    cell.appendChild(coords);

    const controls = document.createElement("div");
    controls.className = "slot-controls";

    if (view.visualState === "vacant") {
      const reserve = document.createElement("button");
      reserve.className = "reserve-btn";
      reserve.textContent = "Reserve";
      reserve.addEventListener("click", () => handlers.onReserve(view.index));
      controls.appendChild(reserve);
    }

    if (view.reservedByMe) {
      const release = document.createElement("button");
      release.className = "release-btn";
      release.textContent = "Release";
      release.addEventListener("click", () => handlers.onRelease(view.index));
      controls.appendChild(release);
    }

    const nav = document.createElement("a");
    nav.className = "navigate-link";
    nav.textContent = "Navigate";
    if (view.navUrl && view.gps) {
      nav.href = view.navUrl;
      nav.target = "_blank";
      nav.rel = "noopener";
      nav.addEventListener("click", (ev) => {
        ev.preventDefault();
        handlers.onNavigate(view.index);
      });
    } else {
      nav.setAttribute("aria-disabled", "true");
      nav.classList.add("disabled");
    }
    controls.appendChild(nav);

    cell.appendChild(controls);
    grid.appendChild(cell);
  }
  return grid;
}

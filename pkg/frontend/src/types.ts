export type Occupancy = "vacant" | "occupied";
export type VisualState = "vacant" | "occupied" | "reserved";

export interface Gps {
  lat: number;
  lon: number;
}

export interface SlotState {
  index: number;
  occupancy: Occupancy;
  reserved: boolean;
  reserved_by: string;
  gps: Gps | null;
  nav_url: string | null;
  updated_at: number | null;
}

export interface SlotsResponse {
  lot_id: string;
  slot_count: number;
  slots: SlotState[];
}

/** What the grid renders. Reserved styling wins over occupied. */
export interface SlotView {
  index: number;
  visualState: VisualState;
  gps: Gps | null;
  navUrl: string | null;
  reservedByMe: boolean;
}

export function toView(slot: SlotState, myToken: string): SlotView {
  const visualState: VisualState = slot.reserved
    ? "reserved"
    : slot.occupancy === "occupied"
      ? "occupied"
      : "vacant";
  return {
    index: slot.index,
    visualState,
    gps: slot.gps ?? null,
    navUrl: slot.nav_url ?? null,
    reservedByMe: slot.reserved && slot.reserved_by === myToken,
  };
}

import { ApiClient } from "./api.js";
import { App, type AppElements } from "./app.js";
import { sessionToken } from "./session.js";

function requireEl<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing #${id}`);
  }
  return el as T;
}

function bootstrap(): void {
  const lotId = new URLSearchParams(window.location.search).get("lot") ?? "lot";
  const token = sessionToken();
  const api = new ApiClient(lotId, token);
  const elements: AppElements = {
    grid: requireEl("grid"),
    message: requireEl("message"),
    banner: requireEl("banner"),
    annotated: requireEl<HTMLImageElement>("annotated"),
    reserveAll: requireEl<HTMLButtonElement>("reserve-all"),
  };
  requireEl("lot-name").textContent = lotId;
  new App(api, elements, token).start();
}

document.addEventListener("DOMContentLoaded", bootstrap);

/** Single point of configuration: where the prediction service lives. */

const DEFAULT_BASE_URL = "http://localhost:8000";

export function apiBaseUrl(): string {
  if (typeof window !== "undefined") {
    const fromQuery = new URLSearchParams(window.location.search).get("api");
    if (fromQuery) return fromQuery.replace(/\/+$/, "");
  }
  return DEFAULT_BASE_URL;
}

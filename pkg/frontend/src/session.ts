const KEY = "parkscan-session-token";

/** Random 128-bit hex token, minted once per browser and kept in storage. */
export function sessionToken(storage: Storage = window.localStorage): string {
  const existing = storage.getItem(KEY);
  if (existing) {
    return existing;
  }
  const bytes = new Uint8Array(16);
  crypto.getRandomValues(bytes);
  const token = Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
  storage.setItem(KEY, token);
  return token;
}

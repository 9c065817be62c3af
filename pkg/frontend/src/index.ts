export * from "./api.js";
export * from "./timeline.js";
export * from "./scene.js";
export * from "./state-panel.js";
export * from "./replay-form.js";
export * from "./ws.js";

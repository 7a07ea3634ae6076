import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// same-origin by default (the service mounts this bundle); override with
// <body data-service-url="http://127.0.0.1:8787"> for detached dev
const base = document.body.dataset.serviceUrl ?? "";
void new App(root, base).boot();

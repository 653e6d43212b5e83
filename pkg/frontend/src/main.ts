import { ApiClient } from "./api.js";
import { OperatorApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://localhost:8000";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

const app = new OperatorApp(root, new ApiClient(base));
void app.start();

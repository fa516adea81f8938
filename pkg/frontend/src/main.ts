import { ApiClient } from "./api";
import { App } from "./app";

const DEFAULT_API = "http://127.0.0.1:8321";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? DEFAULT_API);

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
void new App(api, root).start();

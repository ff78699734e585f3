/** Browser entry: mount the studio against a configurable engine URL.
 *
 * Pass ?engine=http://host:port to point at a non-default service.
 */

import { EngineClient } from "./api";
import { createApp } from "./app";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("engine") ?? "http://127.0.0.1:8000";
const root = document.getElementById("root");
if (!root) throw new Error("page is missing the #root element");
createApp(root, new EngineClient(baseUrl));

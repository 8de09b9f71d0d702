import { Editor } from "./editor";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new Editor(root);

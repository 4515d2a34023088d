// DOM shell: renders the current triplet side by side and wires the keyboard.
import { HttpTransport } from "./api.js";
import { ReviewQueue, handleKey } from "./queue.js";
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing #${id}`);
    return node;
}
function renderPane(pane, title, url, imageId) {
    pane.innerHTML = "";
    const heading = document.createElement("h2");
    heading.textContent = title;
    const img = document.createElement("img");
    img.src = url;
    img.alt = `${title}: ${imageId}`;
    img.addEventListener("click", () => img.classList.toggle("zoomed"));
    const caption = document.createElement("p");
    caption.textContent = imageId;
    pane.append(heading, img, caption);
}
function render(queue) {
    const item = queue.current();
    const { done, total } = queue.position();
    const bar = el("bar");
    const pct = total ? Math.round((100 * done) / total) : 0;
    bar.style.width = `${pct}%`;
    el("progress-text").textContent = total
        ? `${done} / ${total} labeled (${pct}%)`
        : "loading…";
    el("filter-state").textContent = `filter: ${queue.filter}`;
    const retryBox = el("retry");
    if (queue.retryState) {
        retryBox.hidden = false;
        el("retry-message").textContent =
            `submit failed (${queue.retryState.message}) — press R to retry`;
    }
    else {
        retryBox.hidden = true;
    }
    const stage = el("stage");
    const doneBox = el("done");
    if (!item) {
        stage.hidden = true;
        doneBox.hidden = !queue.exhausted;
        return;
    }
    stage.hidden = false;
    doneBox.hidden = true;
    renderPane(el("pane-style"), "Style reference", item.style_url, item.style_ref);
    renderPane(el("pane-content"), "Content reference", item.content_url, item.content_ref);
    renderPane(el("pane-target"), "Target", item.target_url, item.target);
    el("triplet-meta").textContent =
        `${item.triplet_id} · ${item.source} · current label: ${item.label}`;
}
async function boot() {
    const curator = localStorage.getItem("curator") ?? `curator-${Math.random().toString(36).slice(2, 8)}`;
    localStorage.setItem("curator", curator);
    const queue = new ReviewQueue(new HttpTransport(), curator);
    queue.onChange = () => render(queue);
    document.addEventListener("keydown", (event) => {
        if (event.defaultPrevented || event.metaKey || event.ctrlKey || event.altKey)
            return;
        void handleKey(queue, event.key);
    });
    for (const [id, key] of [["btn-high", "h"], ["btn-low", "l"], ["btn-skip", "s"], ["btn-retry", "r"]]) {
        el(id).addEventListener("click", () => void handleKey(queue, key));
    }
    await queue.start();
}
void boot();

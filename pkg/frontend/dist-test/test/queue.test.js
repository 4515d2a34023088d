// Headless exercise of the full labeling loop through the keyboard surface.
import assert from "node:assert/strict";
import { test } from "node:test";
import { ReviewQueue, handleKey } from "../src/queue.js";
import { MockService } from "./mock_service.js";
const EIGHT = ["t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"];
async function startedQueue(service, pageSize = 4) {
    const queue = new ReviewQueue(service, "ann", pageSize);
    await queue.start();
    return queue;
}
test("pressing H eight times labels the whole fixture high", async () => {
    const service = new MockService(EIGHT);
    const queue = await startedQueue(service);
    for (let i = 0; i < 8; i++) {
        assert.equal(await handleKey(queue, "h"), true);
    }
    assert.deepEqual(service.progress(), { high: 8, low: 0, unlabeled: 0, total: 8 });
    const { done, total } = queue.position();
    assert.equal(done, 8);
    assert.equal(total, 8);
    assert.equal(queue.exhausted, true);
    assert.equal(queue.current(), null);
    assert.equal(service.log.length, 8);
    assert.ok(service.log.every((entry) => entry.curator === "ann"));
});
test("relabel round-trips: L then revisit and press H leaves high", async () => {
    const service = new MockService(EIGHT);
    const queue = await startedQueue(service);
    const first = queue.current();
    assert.ok(first);
    assert.equal(await handleKey(queue, "l"), true);
    assert.equal(service.labelOf(first.triplet_id), "low");
    // revisit through the all filter and relabel
    await handleKey(queue, "a");
    assert.equal(queue.filter, "all");
    assert.equal(queue.jumpTo(first.triplet_id), true);
    assert.equal(queue.current()?.triplet_id, first.triplet_id);
    assert.equal(await handleKey(queue, "h"), true);
    assert.equal(service.labelOf(first.triplet_id), "high");
    assert.deepEqual(service.progress(), { high: 1, low: 0, unlabeled: 7, total: 8 });
});
test("failed submit surfaces a retry and does not advance", async () => {
    const service = new MockService(EIGHT);
    const queue = await startedQueue(service);
    const first = queue.current();
    assert.ok(first);
    service.failNextSubmits = 1;
    assert.equal(await handleKey(queue, "h"), false);
    assert.ok(queue.retryState, "retry prompt visible");
    assert.match(queue.retryState.message, /connection reset/);
    assert.equal(queue.current()?.triplet_id, first.triplet_id, "no local advance");
    assert.equal(queue.current()?.label, "unlabeled", "optimistic label rolled back");
    assert.equal(service.log.length, 0, "label not silently recorded");
    // labels are blocked while the retry prompt is up
    assert.equal(await handleKey(queue, "l"), false);
    // retry succeeds and the queue advances
    assert.equal(await handleKey(queue, "r"), true);
    assert.equal(queue.retryState, null);
    assert.equal(service.labelOf(first.triplet_id), "high");
    assert.notEqual(queue.current()?.triplet_id, first.triplet_id);
});
test("skip advances without recording a label and the item resurfaces", async () => {
    const service = new MockService(["a", "b"]);
    const queue = await startedQueue(service, 2);
    const first = queue.current();
    assert.ok(first);
    await handleKey(queue, "s");
    assert.equal(service.log.length, 0);
    assert.notEqual(queue.current()?.triplet_id, first.triplet_id);
    // label the second, refill brings the skipped one back
    await handleKey(queue, "h");
    assert.equal(queue.current()?.triplet_id, first.triplet_id);
});
test("unlabeled refill pages from the shifting frontier until exhausted", async () => {
    const ids = Array.from({ length: 10 }, (_, i) => `t${i}`);
    const service = new MockService(ids);
    const queue = await startedQueue(service, 3);
    let guard = 0;
    while (queue.current() && guard++ < 30) {
        await handleKey(queue, "l");
    }
    assert.deepEqual(service.progress(), { high: 0, low: 10, unlabeled: 0, total: 10 });
    assert.equal(queue.exhausted, true);
});
test("all filter paginates forward and supports walking back", async () => {
    const service = new MockService(EIGHT);
    const queue = await startedQueue(service, 3);
    await queue.setFilter("all");
    const seen = [];
    for (let i = 0; i < 8; i++) {
        const cur = queue.current();
        assert.ok(cur, `item ${i} present`);
        seen.push(cur.triplet_id);
        await queue.skip();
    }
    assert.deepEqual(seen, [...EIGHT].sort());
    queue.prev();
    assert.equal(queue.current()?.triplet_id, seen[seen.length - 1]);
});
test("only one submission is in flight at a time", async () => {
    const service = new MockService(EIGHT);
    const queue = await startedQueue(service);
    const a = queue.label("high");
    const b = queue.label("low"); // rejected: first ack still pending
    const [ra, rb] = await Promise.all([a, b]);
    assert.equal(ra, true);
    assert.equal(rb, false);
    assert.equal(service.log.length, 1);
});
test("unknown keys do nothing", async () => {
    const service = new MockService(["x"]);
    const queue = await startedQueue(service);
    assert.equal(await handleKey(queue, "q"), false);
    assert.equal(service.log.length, 0);
});

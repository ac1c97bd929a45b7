import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SceneSync } from "../src/sync.js";
import { sceneFixture } from "./fixtures.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("posts ops with the base revision", async () => {
    const calls: { url: string; body: unknown }[] = [];
    const api = new ApiClient("http://svc.test", async (url, init) => {
      calls.push({ url, body: JSON.parse(String(init?.body)) });
      return jsonResponse({ revision: 3, scene: sceneFixture() });
    });
    const result = await api.postOps("ses_1", 2, [
      { op: "move", placement_id: "p0001", x: 1, y: 2 },
    ]);
    expect(result.ok).toBe(true);
    expect(calls[0].url).toBe("http://svc.test/sessions/ses_1/scene/ops");
    expect(calls[0].body).toEqual({
      base_revision: 2,
      ops: [{ op: "move", placement_id: "p0001", x: 1, y: 2 }],
    });
  });

  it("maps 409 into a conflict result with the current revision", async () => {
    const api = new ApiClient("http://svc.test", async () =>
      jsonResponse(
        { error: { type: "RevisionConflict", message: "stale", current_revision: 7 } },
        409,
      ),
    );
    const result = await api.postOps("ses_1", 2, []);
    expect(result).toEqual({ ok: false, conflict: true, currentRevision: 7 });
  });

  it("surfaces structured errors", async () => {
    const api = new ApiClient("http://svc.test", async () =>
      jsonResponse({ error: { type: "NotFound", message: "session not found: x" } }, 404),
    );
    await expect(api.getScene("x")).rejects.toMatchObject({
      status: 404,
      kind: "NotFound",
    });
  });

  it("polls jobs until terminal", async () => {
    let polls = 0;
    const api = new ApiClient("http://svc.test", async () => {
      polls += 1;
      return jsonResponse({
        job_id: "j1",
        kind: "curate",
        state: polls < 3 ? "running" : "done",
        progress: polls / 3,
        result: { session_id: "s" },
        error: null,
      });
    });
    const job = await api.waitForJob("j1", 1);
    expect(job.state).toBe("done");
    expect(polls).toBe(3);
  });
});

describe("SceneSync rebase-and-retry", () => {
  it("retries surviving ops once after a conflict", async () => {
    const fresh = sceneFixture();
    fresh.revision = 5;
    fresh.placements = fresh.placements.filter((p) => p.placement_id !== "p0002");
    const after = { ...fresh, revision: 6 };
    const posts: unknown[] = [];
    let postCount = 0;
    const api = new ApiClient("http://svc.test", async (url, init) => {
      if (url.endsWith("/scene") && (!init || init.method === undefined)) {
        return jsonResponse(postCount === 0 ? sceneFixture() : fresh);
      }
      postCount += 1;
      posts.push(JSON.parse(String(init?.body)));
      if (postCount === 1) {
        return jsonResponse(
          { error: { type: "RevisionConflict", message: "stale", current_revision: 5 } },
          409,
        );
      }
      return jsonResponse({ revision: 6, scene: after });
    });
    const notices: string[] = [];
    const sync = new SceneSync(api, "ses_1", (m) => notices.push(m));
    await sync.load();
    const ok = await sync.apply([
      { op: "move", placement_id: "p0001", x: 9, y: 9 },
      { op: "rotate", placement_id: "p0002", degrees: 15 }, // gone on the server
    ]);
    expect(ok).toBe(true);
    expect(posts).toHaveLength(2);
    expect((posts[1] as { ops: unknown[] }).ops).toEqual([
      { op: "move", placement_id: "p0001", x: 9, y: 9 },
    ]);
    expect(sync.scene?.revision).toBe(6);
    expect(notices.some((n) => n.includes("no longer applied"))).toBe(true);
  });
});

/** Scripted review session against the real review server.
 *
 * Spawns `ixpkit review-serve` on a fixture state with five pending
 * candidates, accepts two, rejects one, creates one manual step-6
 * candidate, and checks the final progress counters. A second client
 * ("page refresh") must observe identical server state.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ReviewApi } from "../src/api.js";
import { QueueController } from "../src/controller.js";

const FIXTURE_STATE = new URL("./fixtures/state.json", import.meta.url).pathname;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const port = address.port;
      server.close(() => resolve(port));
    });
  });
}

async function waitForServer(base: string, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${base}/api/v1/progress`);
      if (response.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`review server did not come up: ${String(lastError)}`);
}

let child: ChildProcess | null = null;
let workdir = "";
let base = "";

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "ixpkit-ui-"));
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  child = spawn(
    "python3",
    [
      "-m",
      "ixpkit.cli",
      "review-serve",
      "--port",
      String(port),
      "--decisions",
      join(workdir, "decisions.jsonl"),
      "--state",
      FIXTURE_STATE,
    ],
    { stdio: "inherit" },
  );
  await waitForServer(base);
}, 30000);

afterAll(() => {
  child?.kill("SIGTERM");
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("scripted review session", () => {
  it("works the queue end to end and survives a refresh", async () => {
    const api = new ReviewApi(base);
    const controller = new QueueController(api, "scripted");

    await controller.load();
    expect(controller.entries).toHaveLength(5);

    // accept two candidates
    await controller.decide("accept");
    await controller.decide("accept");
    // reject one
    await controller.decide("reject");
    expect(controller.entries).toHaveLength(2);

    // manual step-6 candidate between two unmatched IXPs
    const left = await api.searchIxps("solo", "euro-ix", "euro-ix|peeringdb");
    const right = await api.searchIxps("different", "peeringdb");
    expect(left.items).toHaveLength(1);
    expect(right.items).toHaveLength(1);
    await controller.createManual(
      left.items[0]!.canonical_id,
      right.items[0]!.canonical_id,
    );

    const created = controller.entries.find(
      (e) => e.candidate.heuristic_step === 6,
    );
    expect(created).toBeDefined();
    expect(created!.candidate.state).toBe("pending");

    await controller.refreshProgress();
    expect(controller.progress!.totals).toEqual({
      pending: 3,
      accepted: 2,
      rejected: 1,
      candidates: 6,
    });

    // page refresh: a fresh client sees the same server state
    const refreshed = new QueueController(new ReviewApi(base), "scripted");
    await refreshed.load();
    await refreshed.refreshProgress();
    expect(refreshed.entries).toHaveLength(3);
    expect(refreshed.progress!.totals).toEqual({
      pending: 3,
      accepted: 2,
      rejected: 1,
      candidates: 6,
    });
    const ids = (xs: QueueController) =>
      xs.entries.map((e) => e.candidate.candidate_id).sort();
    expect(ids(refreshed)).toEqual(ids(controller));
  }, 30000);

  it("rejects self-pairs client-side before the API sees them", async () => {
    const controller = new QueueController(new ReviewApi(base), "scripted");
    await controller.load();
    const someId = controller.entries[0]!.left.canonical_id;
    await expect(controller.createManual(someId, someId)).rejects.toThrow(
      /itself/,
    );
  });

  it("serves read-only detail without mutating state", async () => {
    const api = new ReviewApi(base);
    const before = await api.progress();
    const page = await api.listCandidates({ limit: 100 });
    for (const item of page.items) {
      const detail = await api.getCandidate(item.candidate.candidate_id);
      expect(detail.candidate.state).toBe("pending");
      const ixp = await api.getIxp(item.left.canonical_id);
      expect(ixp.canonical_id).toBe(item.left.canonical_id);
    }
    expect(await api.progress()).toEqual(before);
  });
});

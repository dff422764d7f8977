import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { StubService, message } from "./stub.js";

describe("ApiClient", () => {
  it("pages transcripts with since and timeout", async () => {
    const stub = new StubService();
    stub.transcript = [message(1), message(2), message(3)];
    const api = new ApiClient("", stub.fetch);
    const page = await api.getTranscript("r1", 1, 5);
    expect(page.map((m) => m.seq)).toEqual([2, 3]);
    expect(stub.journal[0]?.url).toContain("since=1");
    expect(stub.journal[0]?.url).toContain("timeout=5");
  });

  it("raises on http errors for GETs", async () => {
    const stub = new StubService();
    const api = new ApiClient("", stub.fetch);
    await expect(api.getReport("r1")).rejects.toThrow(/404/);
  });

  it("maps decision statuses onto outcomes", async () => {
    const stub = new StubService();
    const api = new ApiClient("", stub.fetch);
    expect((await api.submitDecision("i1", "SKIP")).kind).toBe("accepted");
    expect((await api.submitDecision("i1", "SKIP")).kind).toBe("conflict");
  });
});

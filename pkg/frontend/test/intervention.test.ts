import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { InterventionSubmitter } from "../src/intervention.js";
import { StubService } from "./stub.js";

const SVA = "p1: assert property (@(posedge clk) push |-> !full);";

describe("InterventionSubmitter", () => {
  it("INTERCEPT submits exactly one decision on double-click", async () => {
    const stub = new StubService();
    const submitter = new InterventionSubmitter(new ApiClient("", stub.fetch));
    const [first, second] = await Promise.all([
      submitter.submit("i1", "INTERCEPT", SVA),
      submitter.submit("i1", "INTERCEPT", SVA),
    ]);
    const kinds = [first.kind, second.kind].sort();
    expect(kinds).toEqual(["accepted", "duplicate"]);
    expect(stub.postedDecisions()).toHaveLength(1);
    const body = stub.postedDecisions()[0]?.body as { choice: string; replacement_content: string };
    expect(body.choice).toBe("INTERCEPT");
    expect(body.replacement_content).toBe(SVA);
  });

  it("repeat click after settlement is also a duplicate", async () => {
    const stub = new StubService();
    const submitter = new InterventionSubmitter(new ApiClient("", stub.fetch));
    expect((await submitter.submit("i1", "SKIP")).kind).toBe("accepted");
    expect((await submitter.submit("i1", "SKIP")).kind).toBe("duplicate");
    expect(stub.postedDecisions()).toHaveLength(1);
  });

  it("blocks empty INTERCEPT before any network call", async () => {
    const stub = new StubService();
    const submitter = new InterventionSubmitter(new ApiClient("", stub.fetch));
    const result = await submitter.submit("i1", "INTERCEPT", "   ");
    expect(result.kind).toBe("blocked");
    expect(stub.postedDecisions()).toHaveLength(0);
  });

  it("conflict from the service surfaces for a panel notice", async () => {
    const stub = new StubService();
    stub.decisionStatus = 409;
    const submitter = new InterventionSubmitter(new ApiClient("", stub.fetch));
    const result = await submitter.submit("i1", "SKIP");
    expect(result.kind).toBe("conflict");
    if (result.kind === "conflict") {
      expect(result.detail).toMatch(/already answered/);
    }
  });

  it("network errors do not settle the intervention", async () => {
    const stub = new StubService();
    stub.offline = true;
    const submitter = new InterventionSubmitter(new ApiClient("", stub.fetch));
    await expect(submitter.submit("i1", "SKIP")).rejects.toThrow();
    stub.offline = false;
    expect((await submitter.submit("i1", "SKIP")).kind).toBe("accepted");
  });
});

import { describe, expect, it } from "vitest";

import { ServiceClient, ServiceError } from "../src/api";

describe("ServiceClient", () => {
  it("builds component urls with encoding", () => {
    const c = new ServiceClient("http://localhost:8787");
    expect(c.componentUrl("scene 1", "S_A")).toBe(
      "http://localhost:8787/api/scenes/scene%201/component/S_A");
  });

  it("parses scene listings", async () => {
    const payload = [{ id: "a", width: 64, height: 64, kelvin: 5000, has_decomposition: true }];
    const c = new ServiceClient("", (async () =>
      new Response(JSON.stringify(payload), { status: 200 })) as typeof fetch);
    expect(await c.listScenes()).toEqual(payload);
  });

  it("posts relight bodies and returns blobs", async () => {
    let captured: { url: string; body: string } | null = null;
    const c = new ServiceClient("", (async (input: RequestInfo | URL, init?: RequestInit) => {
      captured = { url: String(input), body: String(init?.body) };
      return new Response(new Blob(["png-bytes"]), { status: 200 });
    }) as typeof fetch);
    const blob = await c.relight({ scene_id: "s", kappa: 1, alpha: 0.5, kelvin: 3000 });
    expect(await blob.text()).toBe("png-bytes");
    expect(captured!.url).toBe("/api/relight");
    expect(JSON.parse(captured!.body)).toEqual(
      { scene_id: "s", kappa: 1, alpha: 0.5, kelvin: 3000 });
  });

  it("surfaces service errors with their status and message", async () => {
    const c = new ServiceClient("", (async () =>
      new Response(JSON.stringify({ error: "no decomposition" }), { status: 404 })) as typeof fetch);
    const err = await c.relight({ scene_id: "s", kappa: 1, alpha: 1, kelvin: 5000 })
      .catch((e) => e as ServiceError);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).status).toBe(404);
    expect((err as ServiceError).message).toBe("no decomposition");
  });
});

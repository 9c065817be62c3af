import { describe, expect, it } from "vitest";

import { ApiError, TrkClient } from "../src/api.js";

function fakeFetch(routes: Record<string, unknown>) {
  const seen: Array<{ url: string; init?: RequestInit }> = [];
  const impl = async (url: string, init?: RequestInit) => {
    seen.push({ url, init });
    const path = url.replace("http://test", "");
    if (path in routes) {
      return new Response(JSON.stringify(routes[path]), { status: 200 });
    }
    return new Response(JSON.stringify({ detail: "not found" }), {
      status: 404,
    });
  };
  return { impl, seen };
}

describe("TrkClient", () => {
  it("fetches and decodes sessions", async () => {
    const { impl } = fakeFetch({
      "/sessions": [{ id: 0, label: "base" }],
    });
    const client = new TrkClient("http://test/", impl);
    const sessions = await client.sessions();
    expect(sessions[0]!.label).toBe("base");
  });

  it("builds call queries with window parameters", async () => {
    const { impl, seen } = fakeFetch({
      "/sessions/3/calls?top_level=true&start=5&end=9": [],
    });
    const client = new TrkClient("http://test", impl);
    await client.calls(3, { topLevel: true, start: 5, end: 9 });
    expect(seen[0]!.url).toContain("start=5");
    expect(seen[0]!.url).toContain("end=9");
  });

  it("posts replay requests as JSON", async () => {
    const { impl, seen } = fakeFetch({
      "/replay": { status: "done", session: 1 },
    });
    const client = new TrkClient("http://test", impl);
    const resp = await client.replay({ mode: "call", target: 7, mocked: ["rand_int"] });
    expect(resp.status).toBe("done");
    expect(seen[0]!.init?.method).toBe("POST");
    const body = JSON.parse(String(seen[0]!.init?.body));
    expect(body.target).toBe(7);
  });

  it("surfaces error details from the service", async () => {
    const { impl } = fakeFetch({});
    const client = new TrkClient("http://test", impl);
    await expect(client.session(99)).rejects.toThrowError(ApiError);
    await expect(client.session(99)).rejects.toThrow("not found");
  });
});

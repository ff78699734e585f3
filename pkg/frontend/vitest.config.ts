import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the integration test waits for a spawned engine process
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000, // the fidelity suite boots the python session server
    hookTimeout: 30_000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 300000,
    hookTimeout: 300000,
    // The session service allows one client at a time; run files serially.
    fileParallelism: false,
    pool: "forks",
  },
});

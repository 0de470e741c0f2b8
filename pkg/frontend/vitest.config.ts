import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    testTimeout: 15000,
    hookTimeout: 30000,
    // The live-service suite drives one shared child process; parallel
    // files would race over the single rig.
    fileParallelism: false,
  },
});

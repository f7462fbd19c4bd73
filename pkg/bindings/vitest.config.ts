import { defineConfig } from "vitest/config";

// Every assertion spawns the CLI (a Python process), so individual tests
// need far more than the default timeout.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

import { spawnSync } from "node:child_process";

/**
 * The native pipeline is reached exclusively through its command-line
 * interface and file formats. `CPCLUSTER_CLI` overrides the command
 * (space separated), `CPCLUSTER_PYTHON` just the interpreter.
 */
export function cliCommand(): string[] {
  const override = process.env.CPCLUSTER_CLI;
  if (override) {
    return override.split(" ").filter((s) => s.length > 0);
  }
  const python = process.env.CPCLUSTER_PYTHON ?? "python3";
  return [python, "-m", "cpcluster"];
}

export function runCli(args: string[]): string {
  const [cmd, ...prefix] = cliCommand();
  const result = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new Error(`failed to launch native CLI: ${result.error.message}`);
  }
  if (result.status !== 0) {
    const detail = (result.stderr || result.stdout || "").trim();
    throw new Error(`native CLI exited with ${result.status}: ${detail}`);
  }
  return result.stdout;
}

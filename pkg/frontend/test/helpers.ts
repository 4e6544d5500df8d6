// Test plumbing: a Node TCP transport speaking the same NDJSON protocol the
// browser bridge forwards, plus a launcher for the live Python service.

import { type ChildProcess, spawn } from "node:child_process";
import { Socket } from "node:net";

import { encodeLine } from "../src/protocol.js";
import { TransportBase, type Transport } from "../src/transport.js";

export class TcpTransport extends TransportBase implements Transport {
  private sock: Socket;

  private constructor(sock: Socket) {
    super();
    this.sock = sock;
    sock.setEncoding("utf-8");
    sock.on("data", (chunk: string) => this.parser.push(chunk));
    sock.on("close", () => this.emitClose());
    sock.on("error", () => this.emitClose());
  }

  static connect(port: number, host = "127.0.0.1"): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const sock = new Socket();
      sock.once("error", reject);
      sock.connect(port, host, () => {
        sock.removeListener("error", reject);
        resolve(new TcpTransport(sock));
      });
    });
  }

  send(msg: object): void {
    this.sock.write(encodeLine(msg));
  }

  close(): void {
    this.sock.destroy();
  }
}

export interface LiveService {
  port: number;
  proc: ChildProcess;
  stop(): void;
}

/** Spawn `python3 -m ringpose serve` and wait for its address line. */
export function startService(args: string[], timeoutMs = 120000): Promise<LiveService> {
  return new Promise((resolve, reject) => {
    const proc = spawn("python3", ["-m", "ringpose", "serve", "--port", "0", ...args], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let out = "";
    let err = "";
    const timer = setTimeout(() => {
      proc.kill();
      reject(new Error(`service did not start in time\nstdout:${out}\nstderr:${err}`));
    }, timeoutMs);
    proc.stdout!.setEncoding("utf-8");
    proc.stderr!.setEncoding("utf-8");
    proc.stderr!.on("data", (c: string) => (err += c));
    proc.stdout!.on("data", (chunk: string) => {
      out += chunk;
      const m = out.match(/on 127\.0\.0\.1:(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve({
          port: Number(m[1]),
          proc,
          stop: () => proc.kill(),
        });
      }
    });
    proc.on("exit", (code) => {
      if (!out.match(/on 127\.0\.0\.1:\d+/)) {
        clearTimeout(timer);
        reject(new Error(`service exited early (code ${code})\nstderr:${err}`));
      }
    });
  });
}

export function waitFor(predicate: () => boolean, timeoutMs = 60000, label = "condition"): Promise<void> {
  return new Promise((resolve, reject) => {
    const start = Date.now();
    const tick = () => {
      if (predicate()) return resolve();
      if (Date.now() - start > timeoutMs) return reject(new Error(`timeout waiting for ${label}`));
      setTimeout(tick, 10);
    };
    tick();
  });
}

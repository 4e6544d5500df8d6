// Transport abstraction: the controllers only see lines in and lines out.
// Browsers connect through a WebSocket bridge (see bridge.mjs); tests drive
// a raw TCP socket from Node.

import { createLineParser, encodeLine, type ServerMessage } from "./protocol.js";

export interface Transport {
  send(msg: object): void;
  close(): void;
  onMessage(handler: (msg: ServerMessage) => void): void;
  onClose(handler: () => void): void;
  onProtocolError?(handler: (err: Error, line: string) => void): void;
}

/** Fan-out bookkeeping shared by concrete transports. */
export class TransportBase {
  protected messageHandlers: Array<(msg: ServerMessage) => void> = [];
  protected closeHandlers: Array<() => void> = [];
  protected errorHandlers: Array<(err: Error, line: string) => void> = [];
  protected parser = createLineParser(
    (msg) => this.messageHandlers.forEach((h) => h(msg)),
    (err, line) => this.errorHandlers.forEach((h) => h(err, line)),
  );

  onMessage(handler: (msg: ServerMessage) => void): void {
    this.messageHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  onProtocolError(handler: (err: Error, line: string) => void): void {
    this.errorHandlers.push(handler);
  }

  protected emitClose(): void {
    this.closeHandlers.forEach((h) => h());
  }
}

/** WebSocket transport for browsers; each WS text message carries NDJSON. */
export class WebSocketTransport extends TransportBase implements Transport {
  private ws: WebSocket;

  constructor(url: string) {
    super();
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : "";
      this.parser.push(text.endsWith("\n") ? text : text + "\n");
    };
    this.ws.onclose = () => this.emitClose();
    this.ws.onerror = () => {
      // the close handler owns the disconnected state
    };
  }

  send(msg: object): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeLine(msg));
    }
  }

  close(): void {
    this.ws.close();
  }
}

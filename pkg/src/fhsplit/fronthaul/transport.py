"""Datagram transports between the two endpoints.

Both expose ``send(datagram)``, ``recv(timeout) -> bytes | None``,
``close()`` and a ``lossless`` attribute.
"""

from __future__ import annotations

import queue
import socket
import threading

from ..errors import SessionError


class InProcessChannel:
    """Unbounded FIFO; never drops, never reorders."""

    lossless = True

    def __init__(self):
        self._q: queue.SimpleQueue = queue.SimpleQueue()

    def send(self, datagram: bytes):
        self._q.put(bytes(datagram))

    def recv(self, timeout: float | None = None):
        try:
            return self._q.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self):
        pass


class DatagramChannel:
    """UDP over loopback. Frames dropped by the kernel are simply missing.

    A reader thread drains the socket into a queue so slow consumers do not
    overflow the kernel buffer. ``port`` 0 picks an ephemeral port.
    """

    lossless = False
    RCVBUF = 8 << 20

    def __init__(self, host: str = "127.0.0.1", port: int = 0, tx_port: int = 0):
        self._rx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self._rx.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, self.RCVBUF)
            self._rx.bind((host, port))
            self._rx.settimeout(0.05)
            self._tx.bind((host, tx_port))
        except (OSError, OverflowError) as exc:
            self._rx.close()
            self._tx.close()
            raise SessionError(f"cannot open loopback sockets: {exc}") from exc
        self.address = self._rx.getsockname()
        self._q: queue.SimpleQueue = queue.SimpleQueue()
        self._closed = threading.Event()
        self._reader = threading.Thread(target=self._drain, name="udp-reader", daemon=True)
        self._reader.start()

    def _drain(self):
        while not self._closed.is_set():
            try:
                data = self._rx.recv(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            self._q.put(data)

    def send(self, datagram: bytes):
        try:
            self._tx.sendto(datagram, self.address)
        except OSError as exc:
            raise SessionError(f"datagram send failed: {exc}") from exc

    def recv(self, timeout: float | None = None):
        try:
            return self._q.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self):
        self._closed.set()
        self._reader.join(timeout=1.0)
        self._rx.close()
        self._tx.close()

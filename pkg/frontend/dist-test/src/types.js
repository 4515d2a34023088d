// Mirrors the service's JSON shapes exactly.
export {};

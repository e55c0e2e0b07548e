import { App } from './app';
import { HttpQueryApi } from './api';

// One configuration knob: the query API base URL. Defaults to the host
// that served the bundle; override with ?api=<url>.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('api') ?? window.location.origin;

const root = document.getElementById('app');
if (root) {
  void new App(root, new HttpQueryApi(baseUrl)).start();
}

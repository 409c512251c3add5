import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import { decimateForDisplay } from "./decimate.js";
import { labelColor } from "./state.js";

/** Flatten (and, when huge, decimate) a point list into a renderable geometry. */
export function buildPointsGeometry(points: number[][]): THREE.BufferGeometry {
  const shown = decimateForDisplay(points);
  const positions = new Float32Array(shown.length * 3);
  for (let i = 0; i < shown.length; i++) {
    positions[3 * i] = shown[i][0];
    positions[3 * i + 1] = shown[i][1];
    positions[3 * i + 2] = shown[i][2];
  }
  const geometry = new THREE.BufferGeometry();
  geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
  geometry.computeBoundingSphere();
  return geometry;
}

/**
 * Orbitable 3D scatter of one cluster. Rendering is display-only; the record
 * the caller holds is never touched.
 */
export class ClusterViewer {
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene: THREE.Scene;
  private readonly camera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private cloud: THREE.Points | null = null;

  constructor(private readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene = new THREE.Scene();
    this.scene.background = new THREE.Color(0x14161a);
    this.scene.add(new THREE.AxesHelper(0.5));
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.01, 100);
    this.camera.position.set(1.8, 1.2, 1.8);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.enableDamping = true;
    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.renderer.setAnimationLoop(() => {
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    });
  }

  resize(): void {
    const parent = this.canvas.parentElement;
    if (!parent) return;
    const w = parent.clientWidth;
    const h = parent.clientHeight;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h, false);
  }

  showCluster(points: number[][], label: string): number {
    if (this.cloud) {
      this.scene.remove(this.cloud);
      this.cloud.geometry.dispose();
      (this.cloud.material as THREE.Material).dispose();
    }
    const geometry = buildPointsGeometry(points);
    const material = new THREE.PointsMaterial({
      color: new THREE.Color(labelColor(label)),
      size: 0.015,
      sizeAttenuation: true,
    });
    this.cloud = new THREE.Points(geometry, material);
    this.scene.add(this.cloud);
    this.controls.target.set(0, 0, 0);
    return geometry.getAttribute("position").count;
  }

  clear(): void {
    if (this.cloud) {
      this.scene.remove(this.cloud);
      this.cloud.geometry.dispose();
      (this.cloud.material as THREE.Material).dispose();
      this.cloud = null;
    }
  }
}

import json

from django.test import SimpleTestCase
from django.urls import reverse


class RunMissionViewTests(SimpleTestCase):
    def post(self, body):
        return self.client.post(reverse('runMission'), data=json.dumps(body), content_type='application/json')

    def test_get_not_allowed(self):
        response = self.client.get(reverse('runMission'))
        self.assertEqual(response.status_code, 405)

    def test_runs_one_mission(self):
        response = self.post({'seed': 3, 'config': {'time_limit': 10, 'manager': {'kind': 'none'}}})
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertEqual(data['status'], 'ok')
        self.assertEqual(data['manager'], 'none')
        self.assertEqual(data['config']['time_limit'], 10.0)
        self.assertEqual(data['metrics']['seed'], 3)
        self.assertLessEqual(data['metrics']['search_time_s'], 10.0)

    def test_invalid_config(self):
        response = self.post({'config': {'manager': {'kind': 'oracle'}}})
        self.assertEqual(response.status_code, 400)
        self.assertIn('oracle', response.json()['error'])

    def test_invalid_seed(self):
        response = self.post({'seed': 'one'})
        self.assertEqual(response.status_code, 400)

    def test_body_must_be_json(self):
        response = self.client.post(reverse('runMission'), data='seed=1', content_type='text/plain')
        self.assertEqual(response.status_code, 400)


class KnowledgeBaseViewTests(SimpleTestCase):
    def test_low_visibility_plans_medium_spiral(self):
        response = self.client.get(reverse('knowledgeBase'), {'water_visibility': '1.1'})
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertEqual(data['configuration'], {'O1': 'FD1', 'O2': 'FD4'})

    def test_failed_thruster_plans_recovery(self):
        response = self.client.get(reverse('knowledgeBase'), {'failed': 'thruster_2', 'objectives': 'F1'})
        self.assertEqual(response.json()['configuration'], {'O1': 'FD2'})

    def test_bad_input(self):
        self.assertEqual(self.client.get(reverse('knowledgeBase'), {'failed': 'thruster_9'}).status_code, 400)
        self.assertEqual(self.client.get(reverse('knowledgeBase'), {'water_visibility': 'murky'}).status_code, 400)
        self.assertEqual(self.client.get(reverse('knowledgeBase'), {'objectives': 'F7'}).status_code, 400)

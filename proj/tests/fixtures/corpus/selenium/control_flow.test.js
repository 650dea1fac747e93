const { By } = require('selenium-webdriver');

test('walks every tab', async () => {
  const tabs = ['home', 'profile', 'settings'];
  for (const tab of tabs) {
    await driver.findElement(By.id(`tab-${tab}`)).click();
    if (tab === 'settings') {
      await driver.findElement(By.id('dark-mode')).click();
    } else if (tab === 'profile') {
      await driver.findElement(By.id('avatar')).click();
    } else {
      console.log('nothing to do');
    }
  }
  try {
    await driver.findElement(By.id('save')).click();
  } catch (e) {
    await driver.navigate().refresh();
  } finally {
    console.log('done');
  }
  if (process.env.SLOW) await driver.findElement(By.id('slow')).click();
  let i = 0;
  while (i < 2) {
    await driver.findElement(By.id('next')).click();
    i++;
  }
});
